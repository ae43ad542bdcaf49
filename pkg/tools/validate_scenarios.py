import os
import sys
import json
import jsonschema

script_path = os.path.dirname(os.path.realpath(__file__))
sys.path.insert(0, script_path + '/..')

from elda.exceptions import ConfigurationError  # noqa: E402
from elda.harness.scenarios import ScenarioSpec  # noqa: E402

scenarios_path = script_path + '/../elda/files/scenarios'
schema_path = script_path + '/../format/1.0/scenario-schema.json'

with open(schema_path) as schema_file:
    schema = json.load(schema_file)

for filename in sorted(os.listdir(scenarios_path)):
    if not filename.endswith('.json'):
        continue
    with open(os.path.join(scenarios_path, filename)) as scenario_file:
        scenario = json.load(scenario_file)
    try:
        jsonschema.validate(instance=scenario, schema=schema)
        ScenarioSpec(scenario, filename)
    except (jsonschema.ValidationError, ConfigurationError) as e:
        print("Invalid scenario `{}`: {}".format(filename, e))
        sys.exit(1)
    print("{}: ok".format(filename))
