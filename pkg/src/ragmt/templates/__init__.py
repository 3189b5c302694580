"""Versioned prompt template files shipped with the package.

Templates are plain text with named placeholders and are treated as frozen
artifacts: rendered prompts record the template version so any output can be
traced back to the exact prompt text that produced it.
"""

from __future__ import annotations

from importlib import resources


class TemplateError(ValueError):
    """Unknown template name/version."""


def load_template(name: str, version: str = "v1") -> str:
    filename = f"{name}_{version}.txt"
    ref = resources.files(__package__).joinpath(filename)
    try:
        return ref.read_text(encoding="utf-8")
    except FileNotFoundError:
        raise TemplateError(f"no template {filename!r}") from None
