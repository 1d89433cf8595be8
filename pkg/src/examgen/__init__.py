"""Toolchain for template-driven generation and curation of programming
exam questions: prompt rendering, provider gateway, tolerant response
parsing, structural and execution-based validation, a persistent
question bank with exports, survey statistics, an HTTP API and a CLI.
"""

__version__ = "0.1.0"
