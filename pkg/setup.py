from setuptools import setup, find_packages

setup(
    name="pcav-clarc",
    version="0.1.0",
    packages=find_packages(exclude=["tests", "tests.*", "examples", "examples.*"]),
    install_requires=[
        "numpy",                 # Tensors, linear algebra, PCG64 bit generator
        "python-dotenv",         # .env loading at entry points
        "pytest",                # Testing
    ],
    entry_points={
        "console_scripts": [
            "pcav=src.cli.main:run",
        ],
    },
)
