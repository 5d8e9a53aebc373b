"""Command-line frontend: expression parser, config format, report emission."""

from .expr import ContextError, ExprSyntaxError, LexError, ParseError, parse_expr, to_source

__all__ = ["ContextError", "ExprSyntaxError", "LexError", "ParseError", "parse_expr", "to_source"]
