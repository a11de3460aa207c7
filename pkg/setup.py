"""
setuptools setup file for Deformation Workbench
Run: pip install -e .
"""

from setuptools import setup

setup(
    name='deformation-workbench',
    version='1.0.0',
    description='Exact verification of deformation quantization identities on polynomial charts',
    packages=['core', 'cli'],
    py_modules=['main', 'debug_config'],
    python_requires='>=3.9',
    install_requires=['sympy>=1.14', 'aiofiles>=23.0.0'],
    extras_require={'test': ['pytest>=7.0.0', 'hypothesis>=6.80.0']},
    entry_points={'console_scripts': ['deformation-workbench=main:main']},
)
