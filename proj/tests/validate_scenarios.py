"""Validates every shipped scenario against the published schema."""
import json
import pathlib
import sys

try:
    import jsonschema
    import yaml
except ImportError:  # optional tooling; the C++ loader still checks every file
    print("jsonschema or pyyaml missing, skipping")
    sys.exit(0)

schema = json.loads(pathlib.Path(sys.argv[1]).read_text())
failed = 0
for path in sorted(pathlib.Path(sys.argv[2]).iterdir()):
    text = path.read_text()
    doc = yaml.safe_load(text) if path.suffix in (".yaml", ".yml") else json.loads(text)
    errors = sorted(jsonschema.Draft202012Validator(schema).iter_errors(doc), key=str)
    for e in errors:
        print(f"{path.name}: {'/'.join(map(str, e.path))}: {e.message}")
    failed += bool(errors)
    print(f"{path.name}: {'ok' if not errors else 'INVALID'}")
sys.exit(1 if failed else 0)
