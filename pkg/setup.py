from setuptools import setup

with open("README.md", "r") as f:
    long_description = f.read()

test_reqs = [
    'hypothesis>=6.0'
]

doc_reqs = [
    'Sphinx>=1.5.2'
]

extra_reqs = {
    'doc': doc_reqs,
    'test': test_reqs
}

setup(
    name='fogopt',
    version='0.1.0',
    description='Workload allocation and power efficiency tradeoffs for cooperating fog nodes',
    long_description=long_description,
    long_description_content_type="text/markdown",
    python_requires='>=3.7',
    install_requires=[
        'numpy>=1.17',
        'simpy>=4.0',
        'networkx>=2.4'
    ],
    tests_require=test_reqs,
    extras_require=extra_reqs,
    entry_points={
        'console_scripts': ['fogopt=fogopt.cli:main']
    },
    license='LICENSE.md',
    packages=['fogopt'])
