#!/usr/bin/env python3
"""One-time conversion of the Kaggle SMS spam export to the two-column corpus schema.

The Kaggle file (``spam.csv``) is latin-1 encoded and carries columns
``v1,v2`` plus three unnamed spill-over columns.  This script keeps the
label (v1) and message text (v2), drops the spill-over columns, and writes
a UTF-8 CSV with a ``label,text`` header and RFC-4180 quoting -- the format
`spamkit ingest --format csv` expects.

Usage:
    python scripts/convert_kaggle_spam_csv.py spam.csv data/sms_spam.csv
"""

import csv
import sys


def convert(src: str, dst: str) -> int:
    with open(src, encoding="latin-1", newline="") as f:
        reader = csv.reader(f)
        next(reader)  # v1,v2,...
        rows = [(row[0].strip().lower(), row[1]) for row in reader]
    with open(dst, "w", encoding="utf-8", newline="") as f:
        writer = csv.writer(f)
        writer.writerow(["label", "text"])
        writer.writerows(rows)
    return len(rows)


if __name__ == "__main__":
    if len(sys.argv) != 3:
        sys.exit(__doc__)
    n = convert(sys.argv[1], sys.argv[2])
    print(f"wrote {n} rows to {sys.argv[2]}")
