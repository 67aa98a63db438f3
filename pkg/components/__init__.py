"""
Components package for qpz.
Builds the result record of each subcommand and runs the verification suite.
"""
