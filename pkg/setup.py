#!/usr/bin/env python
# -*- coding: utf-8 -*-

from setuptools import setup, find_packages

exec(open('gridhvac/version.py').read())

install_requires = ['numpy>=1.17',
                    'scipy>=1.3.3',
                    'sympy>=1.5.1',
                    'matplotlib>=3.3']
extras_require = {'doc': ['sphinx', 'numpydoc'],
                  'test': ['pytest>=6'],
                  }

setup(
    name='gridhvac',
    version=__version__,
    author='gridhvac Authors',
    description=('Grid-interactive multi-zone HVAC control with evolution '
                 'strategies, PPO and MPC.'),
    long_description=open('README.rst').read(),
    keywords="hvac demand-response reinforcement-learning mpc",
    license='LICENSE.txt',
    packages=find_packages(),
    python_requires='>=3.6',
    install_requires=install_requires,
    extras_require=extras_require,
    tests_require=['pytest>=6'],
    entry_points={'console_scripts': ['gridhvac = gridhvac.cli:main']},
    include_package_data=True,
    classifiers=['Development Status :: 3 - Alpha',
                 'Intended Audience :: Science/Research',
                 'Operating System :: OS Independent',
                 'Programming Language :: Python :: 3.6',
                 'Programming Language :: Python :: 3.7',
                 'Programming Language :: Python :: 3.8',
                 'Topic :: Scientific/Engineering',
                 ],
)
