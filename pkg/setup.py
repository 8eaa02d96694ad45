#!/usr/bin/env python
# -*- coding: utf8 -*-
"""
ccnet is a desk-scale chained cascade detector: a small convolutional
backbone, per-stage RoI features with growing context, feature and
classifier chaining with early rejection, and the tooling to train,
calibrate, evaluate and compare its ablations on synthetic shapes.
"""
from setuptools import setup, find_packages


def get_version():
    """
    Load and return the current ccnet version.
    """
    local_results = {}
    with open('ccnet/version.py') as fin:
        exec(fin.read(), {}, local_results)
    return local_results['__version__']


if __name__ == '__main__':
    setup(
        name='ccnet',
        version=get_version(),
        long_description=__doc__,
        packages=find_packages(exclude=['tests']),
        include_package_data=True,
        zip_safe=False,
        python_requires='>=3.6',
        install_requires=[
            'numpy',
            'Pillow>=8.0',
            'PyYAML',
            'raven',
            'blinker',
            'docopt'
        ],
        extras_require={
            'tests': ['pytest']
        },
        entry_points={
            'console_scripts': [
                'ccnet = ccnet.__main__:run'
            ]
        }
    )
