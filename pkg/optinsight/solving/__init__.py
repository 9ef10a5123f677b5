"""For importing the task solver."""
from .solver import SolveConfig, TaskSolver, judge_execution, solve_task

__all__ = ["SolveConfig", "TaskSolver", "judge_execution", "solve_task"]
