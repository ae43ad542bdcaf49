import csv
import json
import os


def ensure_dir(path):
    os.makedirs(path, exist_ok=True)
    return path


def write_csv(path, schema, header, rows):
    with open(path, 'w', newline='') as f:
        f.write('# schema: {}\n'.format(schema))
        writer = csv.writer(f, lineterminator='\n')
        writer.writerow(header)
        for row in rows:
            writer.writerow(row)
    return path


def read_csv(path):
    """Rows of a schema-tagged CSV as dicts; the schema comment line is skipped."""
    with open(path, newline='') as f:
        lines = [line for line in f if not line.startswith('#')]
    return list(csv.DictReader(lines))


def write_json(path, document):
    with open(path, 'w') as f:
        json.dump(document, f, indent=2, sort_keys=True)
        f.write('\n')
    return path


def write_jsonl(path, records):
    with open(path, 'w') as f:
        for record in records:
            f.write(json.dumps(record, sort_keys=True) + '\n')
    return path
