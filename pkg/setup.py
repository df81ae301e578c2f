from pip._internal.req import parse_requirements
from setuptools import find_packages, setup

PACKAGE_NAME = "herz-lab"


def load_requirements(fname):
    reqs = parse_requirements(fname, session="hack")
    return [str(ir.requirement) for ir in reqs]


setup(
    name=PACKAGE_NAME,
    version="0.1.0",
    description="Variable-exponent Lebesgue and Herz-Morrey norms, fractional Hardy and Riesz operators, and a harness that checks the inequalities between them numerically.",
    license="LICENSE",
    install_requires=load_requirements("requirements.txt"),
    extras_require={
        "test": ["pytest", "hypothesis"],
    },
    python_requires=">=3.8",
    packages=find_packages(include=["herzlab", "herzlab.*"]),
    entry_points={"console_scripts": ["herzlab=herzlab.cli:main"]},
)
