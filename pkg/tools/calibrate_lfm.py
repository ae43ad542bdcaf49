#!/usr/bin/env python3
# Refits the estimator constant against the exact counter and prints the settings
# fragment to paste into elda/files/elda_settings.json.
import os
import sys
import json
import argparse
import logging

script_path = os.path.dirname(os.path.realpath(__file__))
sys.path.insert(0, script_path + '/..')

from elda.harness.experiments import calibrate  # noqa: E402

if __name__ == '__main__':
    parser = argparse.ArgumentParser(description='Fit the LFM and hyperloglog-FM estimator constant.')
    parser.add_argument('--trials', type=int, default=50)
    parser.add_argument('--seed', type=int, default=0)
    args = parser.parse_args()
    logging.basicConfig(level=logging.INFO, format='%(asctime)s:%(levelname)s:%(name)s:%(message)s')
    result = calibrate(trials=args.trials, seed=args.seed)
    print(json.dumps(result, indent=2, sort_keys=True))
    print(json.dumps({'sketch': {'calibration': round(result['lfm']['calibration'], 3)}}))
