from setuptools import setup, find_packages

setup(
    name="tvvol",
    version="0.1.0",
    packages=find_packages(include=["src", "src.*"]),
    python_requires=">=3.10",
    install_requires=[
        'numpy',
        'scipy',
        'pandas',
        'click',
        'python-dotenv',
        'PyYAML',
    ],
    package_data={"": ["assets/configs/*.yaml"]},
    entry_points={
        "console_scripts": [
            "tvvol=src.tvvol.app:main",
        ],
    },
)
