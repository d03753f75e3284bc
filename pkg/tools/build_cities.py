"""Derive the bundled city attribute file from ``city_sources.csv``.

Hemispheres and latitude bands come from coordinates, continents from the
source column, development status from the country. Run from the repo root:

    python3 tools/build_cities.py
"""

import csv
from collections import Counter
from pathlib import Path

ROOT = Path(__file__).resolve().parents[1]
SOURCE = ROOT / "tools" / "city_sources.csv"
TARGET = ROOT / "src" / "coincidence" / "data" / "cities.csv"

TROPIC = 23.44

# IMF World Economic Outlook "advanced economies" (2024 list, restricted to
# countries present in the source table).
ADVANCED = {
    "Australia", "Austria", "Belgium", "Canada", "Croatia", "Cyprus",
    "Czech Republic", "Denmark", "Estonia", "Finland", "France", "Germany",
    "Greece", "Hong Kong", "Iceland", "Ireland", "Israel", "Italy", "Japan",
    "Latvia", "Lithuania", "Macau", "Malta", "Netherlands", "New Zealand", "Norway",
    "Portugal", "Puerto Rico", "Singapore", "Slovakia", "Slovenia",
    "South Korea", "Spain", "Sweden", "Switzerland", "Taiwan",
    "United Kingdom", "United States",
}

# UN least developed countries (2024 list, same restriction).
LEAST_DEVELOPED = {
    "Afghanistan", "Angola", "Bangladesh", "Burkina Faso", "Burundi",
    "Cambodia", "Chad", "Democratic Republic of the Congo", "Eritrea",
    "Ethiopia", "Guinea", "Haiti", "Laos", "Liberia", "Madagascar", "Malawi",
    "Mali", "Mauritania", "Mozambique", "Myanmar", "Nepal", "Niger", "Rwanda",
    "Senegal", "Sierra Leone", "Somalia", "South Sudan", "Sudan", "Tanzania",
    "Togo", "Uganda", "Yemen", "Zambia",
}

COLUMNS = [
    "east", "west", "north", "south", "tropical", "temperate",
    "africa", "asia", "europe", "north_america", "oceania", "south_america",
    "pop10m_plus", "developed", "developing", "least_developed",
    "capital", "nfl",
]

HEADER = """\
# City attribute roster for the city game.
# roster_version: 1
# reconstructed: true
# The published 500-city roster is not available; this file is a hand-built
# reconstruction of prominent world cities. Hemisphere and latitude columns are
# derived from coordinates (tropical: |lat| < 23.44), development status from
# IMF advanced economies / UN least developed countries, capital means national
# capital, nfl means home metro of an NFL franchise.
# Generated by tools/build_cities.py from tools/city_sources.csv.
"""


def attributes(row):
    lat, lon = float(row["lat"]), float(row["lon"])
    country = row["country"]
    flags = dict.fromkeys(COLUMNS, 0)
    flags["east" if lon >= 0 else "west"] = 1
    flags["north" if lat >= 0 else "south"] = 1
    flags["tropical" if abs(lat) < TROPIC else "temperate"] = 1
    flags[row["continent"]] = 1
    flags["pop10m_plus"] = int(row["pop10m"])
    if country in LEAST_DEVELOPED:
        flags["least_developed"] = 1
    elif country in ADVANCED:
        flags["developed"] = 1
    else:
        flags["developing"] = 1
    flags["capital"] = int(row["capital"])
    flags["nfl"] = int(row["nfl"])
    return flags


def main():
    with SOURCE.open(newline="", encoding="utf-8") as fh:
        rows = list(csv.DictReader(fh))
    names = [r["name"] for r in rows]
    dupes = [n for n, c in Counter(names).items() if c > 1]
    if dupes:
        raise SystemExit(f"duplicate city names: {dupes}")

    totals = Counter()
    with TARGET.open("w", newline="", encoding="utf-8") as fh:
        fh.write(HEADER)
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["name", *COLUMNS])
        for row in rows:
            flags = attributes(row)
            totals.update({k: v for k, v in flags.items() if v})
            writer.writerow([row["name"], *(flags[c] for c in COLUMNS)])

    print(f"{len(rows)} cities -> {TARGET.relative_to(ROOT)}")
    for col in COLUMNS:
        print(f"  {col:16s} {totals[col]}")


if __name__ == "__main__":
    main()
