# -*- coding: utf-8 -*-
"""
Utilities for pretty-printing results.
"""
__all__ = ('plural', 'format_value', 'format_table')


def plural(v, singular, plural):
    return plural.format(v=v) if v != 1 else singular.format(v=v)


def format_value(value, digits=4):
    """
    Floats to a fixed number of decimals, missing values to '-'.
    """
    if value is None or value == '':
        return '-'
    if isinstance(value, float):
        return '{0:.{1}f}'.format(value, digits)
    return str(value)


def format_table(rows, columns):
    """
    Render `rows` (mappings) as a plain aligned text table with one column
    per entry of `columns`.
    """
    cells = [list(columns)] + [
        [format_value(row.get(c)) for c in columns] for row in rows
    ]
    widths = [max(len(line[i]) for line in cells) for i in range(len(columns))]
    lines = []
    for n, line in enumerate(cells):
        lines.append('  '.join(
            cell.ljust(width) for cell, width in zip(line, widths)
        ).rstrip())
        if n == 0:
            lines.append('  '.join('-' * width for width in widths))
    return '\n'.join(lines)
