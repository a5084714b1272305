"""Writes rle_reference.json: masks with their COCO run lengths and
compressed strings, produced by a line-by-line port of the reference
maskApi.c routines rleEncode, rleToString and rleFrString.

Run from this directory: python3 gen_rle_fixtures.py
"""

import json
import random


def rle_encode(flat, h, w):
    # flat is column-major (Fortran order), like pycocotools
    cnts = []
    p, c = 0, 0
    for j in range(h * w):
        if flat[j] != p:
            cnts.append(c)
            c = 0
            p = flat[j]
        c += 1
    cnts.append(c)
    return cnts


def rle_to_string(cnts):
    s = []
    for i, x in enumerate(cnts):
        if i > 2:
            x -= cnts[i - 2]
        more = True
        while more:
            c = x & 0x1F
            x >>= 5
            more = (x != -1) if (c & 0x10) else (x != 0)
            if more:
                c |= 0x20
            s.append(chr(c + 48))
    return "".join(s)


def rle_fr_string(s):
    cnts = []
    p = 0
    while p < len(s):
        x, k, more = 0, 0, True
        while more:
            c = ord(s[p]) - 48
            x |= (c & 0x1F) << (5 * k)
            more = c & 0x20
            p += 1
            k += 1
            if not more and (c & 0x10):
                x |= -1 << (5 * k)
        if len(cnts) > 2:
            x += cnts[-2]
        cnts.append(x)
    return cnts


def fixture(name, h, w, pixels):
    flat = [0] * (h * w)
    for x, y in pixels:
        flat[x * h + y] = 1
    cnts = rle_encode(flat, h, w)
    s = rle_to_string(cnts)
    assert rle_fr_string(s) == cnts
    return {"name": name, "height": h, "width": w, "pixels": sorted(pixels, key=lambda p: (p[1], p[0])),
            "counts": cnts, "compressed": s}


def main():
    rng = random.Random(20240611)
    out = [
        fixture("empty_3x3", 3, 3, []),
        fixture("full_3x3", 3, 3, [(x, y) for x in range(3) for y in range(3)]),
        fixture("single_pixel_1x1", 1, 1, [(0, 0)]),
        # 5-pixel L: vertical arm x=1, y=1..3, foot (2,3),(3,3)
        fixture("l_shape_5px", 6, 6, [(1, 1), (1, 2), (1, 3), (2, 3), (3, 3)]),
        fixture("last_pixel", 7, 5, [(4, 6)]),
        fixture("first_column", 40, 3, [(0, y) for y in range(40)]),
        fixture("sparse_large", 300, 200, [(13, 250), (150, 7), (199, 299)]),
        fixture("long_bar", 64, 512, [(x, y) for x in range(20, 480) for y in range(30, 33)]),
    ]
    for i in range(12):
        h = rng.randint(1, 48)
        w = rng.randint(1, 48)
        density = rng.choice([0.02, 0.2, 0.5, 0.8, 0.98])
        pixels = [(x, y) for x in range(w) for y in range(h) if rng.random() < density]
        out.append(fixture(f"random_{i:02d}", h, w, pixels))
    with open("rle_reference.json", "w") as f:
        json.dump(out, f, indent=1)
        f.write("\n")


if __name__ == "__main__":
    main()
