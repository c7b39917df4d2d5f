"""Concentrating solutions of critical elliptic problems: bubbles, reduction, radial branches, Pohozaev checks."""
