#!/usr/bin/env python3
"""Convert the Multi-Session Chat (MSC) release format into the pipeline's
input schema.

The pipeline consumes newline-delimited JSON, one record per speaker pair:

    {"pair_id": str, "sessions": [[{"speaker": str, "text": str}, ...], ...]}

The MSC release stores one file per session (session_1 ... session_5), each
line a JSON episode with a "dialog" list of turns and a metadata field that
links the same speaker pair across sessions ("initial_data_id"). This script
groups episodes by that id, orders sessions by the order the files are given
on the command line, and keeps only pairs that appear in at least
--min-sessions sessions (the dataset-preparation choice used for topic
extraction depth; the pipeline itself does not filter).

Example:

    python3 tools/msc_to_input.py \
        msc/msc_dialogue/session_1/train.txt \
        msc/msc_dialogue/session_2/train.txt \
        msc/msc_dialogue/session_3/train.txt \
        msc/msc_dialogue/session_4/train.txt \
        --min-sessions 4 -o input.jsonl

Turn speaker labels are taken from the turn's "id" field (falling back to
"speaker"); texts from "text". Episodes with anything other than two
distinct speaker labels are skipped with a notice.
"""

import argparse
import json
import sys


def episode_pair_id(episode, fallback):
    metadata = episode.get("metadata") or {}
    for key in ("initial_data_id", "init_personachat_id", "pair_id"):
        if key in metadata:
            return str(metadata[key])
        if key in episode:
            return str(episode[key])
    return fallback


def episode_turns(episode):
    turns = []
    for turn in episode.get("dialog", episode.get("dialogue", [])):
        speaker = turn.get("id", turn.get("speaker"))
        text = turn.get("text", "")
        if speaker is None:
            return None
        turns.append({"speaker": str(speaker), "text": str(text)})
    return turns


def main():
    parser = argparse.ArgumentParser(description=__doc__,
                                     formatter_class=argparse.RawDescriptionHelpFormatter)
    parser.add_argument("session_files", nargs="+",
                        help="per-session MSC files, in session order")
    parser.add_argument("--min-sessions", type=int, default=4,
                        help="keep pairs present in at least this many sessions")
    parser.add_argument("-o", "--output", default="input.jsonl")
    args = parser.parse_args()

    pairs = {}  # pair_id -> list of sessions in file order
    for session_index, path in enumerate(args.session_files):
        with open(path, encoding="utf-8") as handle:
            for line_no, line in enumerate(handle, 1):
                line = line.strip()
                if not line:
                    continue
                try:
                    episode = json.loads(line)
                except json.JSONDecodeError:
                    print(f"{path}:{line_no}: not JSON, skipped", file=sys.stderr)
                    continue
                turns = episode_turns(episode)
                if not turns:
                    continue
                labels = {t["speaker"] for t in turns}
                if len(labels) != 2:
                    print(f"{path}:{line_no}: {len(labels)} speaker labels, skipped",
                          file=sys.stderr)
                    continue
                pair_id = episode_pair_id(episode, f"{path}:{line_no}")
                pairs.setdefault(pair_id, []).append((session_index, turns))

    kept = 0
    with open(args.output, "w", encoding="utf-8") as out:
        for pair_id, sessions in pairs.items():
            if len(sessions) < args.min_sessions:
                continue
            sessions.sort(key=lambda item: item[0])
            record = {"pair_id": pair_id, "sessions": [turns for _, turns in sessions]}
            out.write(json.dumps(record, ensure_ascii=False) + "\n")
            kept += 1

    print(f"wrote {kept} pairs (of {len(pairs)} seen) to {args.output}", file=sys.stderr)


if __name__ == "__main__":
    main()
