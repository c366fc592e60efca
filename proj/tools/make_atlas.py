#!/usr/bin/env python3
"""Regenerates the embedded glyph atlas from a monospace TTF.

Outputs:
  data/atlas/default.pxfa   -- binary atlas resource
  src/render/atlas_data.inc -- same bytes as a C++ array for embedding

The checked-in outputs are the source of truth at runtime; this script is a
development tool and is not part of the build.

PXFA layout: magic "PXFA", u16 LE glyph count, then per glyph a u32 LE code
point followed by 32 bytes: 16 rows, 2 bytes per row, first byte holding
columns 0..7 MSB-first, second byte reserved (zero).
"""

import os
import struct
import sys

from PIL import Image, ImageDraw, ImageFont

DEFAULT_TTF = (
    "/usr/local/lib/python3.10/dist-packages/matplotlib/"
    "mpl-data/fonts/ttf/DejaVuSansMono.ttf"
)
SIZE = 13
BASELINE = 12
THRESHOLD = 64

CODE_POINTS = sorted(
    set(range(0x20, 0x7F)) | set(ord(c) for c in "äöüÄÖÜß")
)
FALLBACK_CP = 0xFFFD


def render_cell(font, ch):
    img = Image.new("L", (8, 16), 0)
    draw = ImageDraw.Draw(img)
    draw.text((0, BASELINE), ch, font=font, fill=255, anchor="ls")
    px = img.load()
    rows = []
    for y in range(16):
        bits = 0
        for x in range(8):
            if px[x, y] > THRESHOLD:
                bits |= 0x80 >> x
        rows.append(bits)
    return rows


def fallback_box():
    rows = [0] * 16
    for y in range(2, 14):
        rows[y] = 0xFF
    return rows


def main():
    ttf = sys.argv[1] if len(sys.argv) > 1 else DEFAULT_TTF
    root = os.path.dirname(os.path.dirname(os.path.abspath(__file__)))
    font = ImageFont.truetype(ttf, SIZE)

    glyphs = [(cp, render_cell(font, chr(cp))) for cp in CODE_POINTS]
    glyphs.append((FALLBACK_CP, fallback_box()))
    glyphs.sort()

    blob = b"PXFA" + struct.pack("<H", len(glyphs))
    for cp, rows in glyphs:
        blob += struct.pack("<I", cp)
        for bits in rows:
            blob += struct.pack("BB", bits, 0)

    pxfa_path = os.path.join(root, "data", "atlas", "default.pxfa")
    with open(pxfa_path, "wb") as f:
        f.write(blob)

    inc_path = os.path.join(root, "src", "render", "atlas_data.inc")
    with open(inc_path, "w") as f:
        f.write("// Generated by tools/make_atlas.py; do not edit by hand.\n")
        f.write("static const unsigned char kEmbeddedAtlas[] = {\n")
        for i in range(0, len(blob), 16):
            chunk = ", ".join(str(b) for b in blob[i : i + 16])
            f.write("    " + chunk + ",\n")
        f.write("};\n")
        f.write(f"static const unsigned long kEmbeddedAtlasSize = {len(blob)}UL;\n")

    print(f"wrote {pxfa_path} and {inc_path}: {len(glyphs)} glyphs, {len(blob)} bytes")


if __name__ == "__main__":
    main()
