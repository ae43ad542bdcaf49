import json

from setuptools import find_packages, setup

with open('VERSION.json') as f:
    version = json.load(f)

with open('requirements.txt') as f:
    requirements = [line.strip() for line in f if line.strip() and line.strip() != 'nose']

setup(
    name='elda',
    version='{major}.{minor}.{hotfix}'.format(**version),
    description='Cache pollution attack detection for Named Data Networking',
    license='AGPL-3.0',
    packages=find_packages(exclude=['tests']),
    package_data={'elda': ['files/*.json', 'files/scenarios/*.json', 'files/topologies/*.json']},
    install_requires=requirements,
    entry_points={'console_scripts': ['elda=elda.harness.cli:main']},
)
