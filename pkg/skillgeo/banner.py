"""
Skillgeo Banner - pyfiglet ansi_shadow banner for the help screens.
"""

import os
import sys

import pyfiglet

RESET = "\033[0m"

COLORS = {
    "teal": "\033[38;2;0;200;160m",
    "blue": "\033[38;2;80;140;255m",
    "purple": "\033[38;2;140;100;220m",
    "orange": "\033[38;2;255;160;50m",
    "white": "\033[38;2;255;255;255m",
}
DEFAULT_COLOR = "teal"


def render_banner(text="SKILLGEO", color=DEFAULT_COLOR, plain=False):
    """Render ``text`` as an ASCII-art banner.

    Args:
        text: Text to render
        color: Name from COLORS or a hex code like '#00C8A0'
        plain: Return the banner without ANSI codes

    Returns:
        The rendered banner string.
    """
    lines = pyfiglet.figlet_format(text, font="ansi_shadow").rstrip().split("\n")
    if plain or os.environ.get("NO_COLOR"):
        return "\n".join(lines)
    ansi = _resolve_color(color)
    return "\n".join(f"{ansi}{line}{RESET}" for line in lines)


def _resolve_color(color):
    """Map a color name or #RRGGBB code to an ANSI sequence."""
    if color in COLORS:
        return COLORS[color]
    hex_str = color.lstrip("#")
    if len(hex_str) == 6:
        try:
            r, g, b = (int(hex_str[i : i + 2], 16) for i in (0, 2, 4))
        except ValueError:
            return COLORS[DEFAULT_COLOR]
        return f"\033[38;2;{r};{g};{b}m"
    return COLORS[DEFAULT_COLOR]


def print_banner(text="SKILLGEO", color=DEFAULT_COLOR, file=sys.stderr):
    """Print the banner (default: stderr, so reports on stdout stay clean)."""
    print(render_banner(text, color, plain=not file.isatty()), file=file)
