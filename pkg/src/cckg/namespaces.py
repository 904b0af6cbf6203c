from __future__ import annotations

import os
import re
from dataclasses import dataclass

from .rdf import Iri

DEFAULT_BASE = "http://w3id.org/cc-ontology#"
ENV_VAR = "CCKG_NAMESPACE"

_SLUG_STRIP = re.compile(r"[^a-z0-9]+")


def slugify(text: str) -> str:
    """Lowercase, non-alphanumeric runs become a single hyphen."""
    slug = _SLUG_STRIP.sub("-", text.strip().lower()).strip("-")
    return slug or "x"


@dataclass(frozen=True)
class Namespaces:
    """Schema vocabulary namespace plus the namespace individuals are minted in."""

    schema: str = DEFAULT_BASE
    individuals: str = "http://w3id.org/cc-ontology/ind/"

    @classmethod
    def from_base(cls, base: str) -> "Namespaces":
        if not base or base[-1] not in "#/":
            raise ValueError(f"namespace base must end in '#' or '/': {base!r}")
        Iri(base)
        return cls(schema=base, individuals=base.rstrip("#/") + "/ind/")

    @classmethod
    def from_env(cls) -> "Namespaces":
        return cls.from_base(os.environ.get(ENV_VAR, DEFAULT_BASE))

    def term(self, local: str) -> Iri:
        return Iri(self.schema + local)

    def ind(self, *parts: str) -> Iri:
        return Iri(self.individuals + "/".join(parts))


DEFAULT = Namespaces()
