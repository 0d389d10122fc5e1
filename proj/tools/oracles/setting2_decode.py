"""Writes the setting-2 optimal action table A*[l][j] = 2 * (floor(l / 2^(j-1)) mod 2) - 1."""
import json
import sys

table = {str(l): [2 * ((l >> (j - 1)) & 1) - 1 for j in range(1, 5)] for l in range(1, 11)}
out = sys.argv[1] if len(sys.argv) > 1 else "tests/fixtures/setting2_decode.json"
with open(out, "w") as f:
    json.dump(table, f, indent=1)
    f.write("\n")
