"""Validates the shipped config against the documented JSON schemas."""
import json
import sys
from pathlib import Path

import jsonschema
from referencing import Registry, Resource

root = Path(sys.argv[1])
mapping = json.loads((root / "docs/mapping.schema.json").read_text())
config = json.loads((root / "docs/config.schema.json").read_text())
registry = Registry().with_resource("vivo/mapping.schema.json", Resource.from_contents(mapping))
validator = jsonschema.Draft202012Validator(config, registry=registry)
validator.validate(json.loads((root / "config/default.json").read_text()))
jsonschema.Draft202012Validator(mapping).validate(
    json.loads((root / "config/default.json").read_text())["mapping"])
print("config/default.json: valid")
