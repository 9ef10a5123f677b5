"""The prompt template registry.

Templates are jinja2 files (``<template id>.j2``) shipped with the
package. A directory given at start-up takes precedence, so prompts
can be edited without touching the code.
"""
from __future__ import annotations

import hashlib
import pathlib
from collections.abc import Mapping
from dataclasses import dataclass
from typing import Any

from jinja2 import (
    ChoiceLoader,
    Environment,
    FileSystemLoader,
    PackageLoader,
    StrictUndefined,
    TemplateNotFound,
    UndefinedError,
    meta,
    select_autoescape,
)

from optinsight.exceptions import MissingVar

TEMPLATE_SUFFIX = ".j2"


@dataclass(frozen=True)
class PromptTemplate:
    """A prompt body with named placeholders."""

    id: str
    body: str
    required_vars: frozenset[str]


def prompt_hash(text: str) -> str:
    """Hash the canonical form of a rendered prompt."""
    canonical = "\n".join(
        line.rstrip() for line in text.replace("\r\n", "\n").split("\n")
    ).strip()
    return hashlib.sha256(canonical.encode("utf-8")).hexdigest()


class PromptRegistry:
    """Look up and render prompt templates."""

    def __init__(self, template_dir: str | pathlib.Path | None = None):
        loaders: list[Any] = []
        if template_dir is not None:
            loaders.append(FileSystemLoader(str(template_dir)))
        loaders.append(PackageLoader("optinsight.llm", "templates"))
        self.env = Environment(
            loader=ChoiceLoader(loaders),
            autoescape=select_autoescape(enabled_extensions=("html", "htm")),
            trim_blocks=True,
            lstrip_blocks=True,
            keep_trailing_newline=True,
            undefined=StrictUndefined,
        )
        self._cache: dict[str, PromptTemplate] = {}

    def ids(self) -> list[str]:
        """List the available template ids."""
        return sorted(
            name[: -len(TEMPLATE_SUFFIX)]
            for name in self.env.list_templates()
            if name.endswith(TEMPLATE_SUFFIX)
        )

    def template(self, template_id: str) -> PromptTemplate:
        """Return a template and its required variables.

        Raises:
            KeyError: If no template has the id.
        """
        if template_id not in self._cache:
            name = template_id + TEMPLATE_SUFFIX
            try:
                body, _, _ = self.env.loader.get_source(self.env, name)
            except TemplateNotFound as error:
                raise KeyError(
                    f"Unknown prompt template '{template_id}'"
                ) from error
            required = meta.find_undeclared_variables(self.env.parse(body))
            self._cache[template_id] = PromptTemplate(
                id=template_id, body=body, required_vars=frozenset(required)
            )
        return self._cache[template_id]

    def render(self, template_id: str, variables: Mapping[str, Any]) -> str:
        """Render a template with all required variables bound.

        Raises:
            MissingVar: If a required variable is not given.
        """
        template = self.template(template_id)
        missing = sorted(template.required_vars - set(variables))
        if missing:
            raise MissingVar(template_id, missing[0])
        try:
            text = self.env.get_template(template_id + TEMPLATE_SUFFIX).render(
                **variables
            )
        except UndefinedError as error:
            raise MissingVar(template_id, str(error)) from error
        return text.strip() + "\n"
