from setuptools import setup, find_packages

setup(
    name="granger_dr",
    version="0.1.0",
    packages=find_packages(exclude=["tests", "tests.*", "examples", "examples.*"]),
    install_requires=[
        "numpy",
        "pandas",
        "PyYAML>=6.0",
        "prometheus-client>=0.14.1",
        "torch",
        "scipy",
        "scikit-learn",
    ],
    extras_require={"test": ["pytest"]},
    entry_points={
        "console_scripts": [
            "granger-dr=granger_dr.cli.main:main",
        ],
    },
    python_requires=">=3.12",
)
