"""Drives msnv-replay and msnv-server the way a study operator would."""

import json
import pathlib
import shutil
import socket
import subprocess
import sys
import tempfile

replay_bin, server_bin, corpus = sys.argv[1], sys.argv[2], pathlib.Path(sys.argv[3])


def run(*args, ok=True):
    p = subprocess.run([replay_bin, *map(str, args)], capture_output=True, text=True)
    if ok and p.returncode != 0:
        sys.exit(f"{args[0]} failed: {p.stderr}")
    if not ok and p.returncode == 0:
        sys.exit(f"{args[0]} should have failed")
    return p.stdout


def check(cond, what):
    if not cond:
        sys.exit("FAILED: " + what)


def session(port, pid, docs):
    with socket.create_connection(("127.0.0.1", port), timeout=20) as s:
        f = s.makefile("rw", newline="\n")

        def send(msg):
            f.write(json.dumps(msg) + "\n")
            f.flush()

        def recv():
            return json.loads(f.readline())

        send({"type": "HELLO", "participantId": pid})
        msg = recv()
        while msg["type"] == "SHOW_DOC":
            doc_id = msg["doc"]["id"]
            send({"type": "DOC_READY", "docId": doc_id})
            box = docs[doc_id]["layout"]["sentences"][0][0]
            for k in range(60):
                send({"type": "GAZE", "t_ms": k * 1000 / 120, "x": box["x"] + 20, "y": box["y"] + 10, "lv": 1, "rv": 1})
            send({"type": "NEXT", "docId": doc_id})
            msg = recv()
            while msg["type"] != "QUESTIONS":
                msg = recv()
            send({"type": "ANSWERS", "docId": doc_id, "choices": [0] * (len(msg["items"]) - 2), "ratings": [4, 3]})
            msg = recv()
        check(msg["type"] == "END", "session ends with END")
        send({"type": "RATINGS", "items": [5] * 10})
        check(f.readline() == "", "server closes after RATINGS")


with tempfile.TemporaryDirectory() as tmp:
    tmp = pathlib.Path(tmp)
    doc = corpus / "doc05.json"

    run("synth", "--doc", doc, "--speed", "1.0", "--skip", "0.0", "--seed", 7, "--out", tmp / "full.gaze")
    run("synth", "--doc", doc, "--speed", "0.39", "--seed", 7, "--out", tmp / "slow.gaze")
    check((tmp / "full.gaze").read_text().startswith("gaze/1\n"), "synth writes gaze/1")

    reports = tmp / "reports"
    reports.mkdir()
    table = run("replay", "--doc", doc, "--trace", tmp / "full.gaze", "--participant", "fast", "--out", reports / "fast.json")
    check("100.0%" in table, "full-speed reader triggers everything")
    run("replay", "--doc", doc, "--trace", tmp / "slow.gaze", "--participant", "slow", "--out", reports / "slow.json")
    rep = json.loads((reports / "slow.json").read_text())
    check(rep["format"] == "report/1" and rep["summary"]["triggered"] == 0, "slow reader triggers nothing")
    check(json.loads(run("replay", "--doc", doc, "--trace", tmp / "full.gaze", "--json"))["format"] == "report/1", "--json")
    run("replay", "--doc", doc, "--trace", tmp / "full.gaze", "--strategy", "fade", ok=False)
    run("replay", "--doc", doc, ok=False)

    out = run("screen", "--report", reports / "slow.json", "--heatmap", tmp / "slow.csv")
    check("flag-low-trigger" in out and (tmp / "slow.csv").exists(), "screen flags and exports the heat map")
    check("keep" in run("screen", "--report", reports / "fast.json", "--invalid-threshold", "0.25"), "screen keeps")

    out = run("cohort", "--reports", reports, "--exclude", "slow")
    check("participants:             2" in out and "retained:                 1" in out, "cohort counts")

    docs_dir = tmp / "docs"
    docs_dir.mkdir()
    docs = {}
    for name in ("doc01.json", "doc02.json"):
        shutil.copy(corpus / name, docs_dir / name)
        docs[name[:-5]] = json.loads((corpus / name).read_text())
    logs = tmp / "logs"
    server = subprocess.Popen(
        [server_bin, "--port", "0", "--docs", docs_dir, "--seed", "3", "--strategy", "remove", "--fraction", "0.4",
         "--log-dir", logs],
        stdout=subprocess.PIPE, text=True)
    try:
        port = int(server.stdout.readline().split(":")[1].split()[0])
        session(port, "S1", docs)
        session(port, "S2", docs)
    finally:
        server.terminate()
        server.wait(timeout=20)
    check("2 sessions completed" in server.stdout.read(), "server counts completed sessions")
    log = json.loads((logs / "S1.msnvlog.json").read_text())
    check(log["format"] == "msnvlog/1" and len(log["tasks"]) == 2, "server writes msnvlog/1")
    check((logs / "S1" / "doc01.gaze").read_text().startswith("gaze/1\n"), "server records traces")

    run("analyze", "--logs", logs, "--by", "group", "document", "--pvalues", "0.01", "0.04",
        "--table-out", tmp / "measures.csv", "--out", tmp / "analysis.json")
    res = json.loads((tmp / "analysis.json").read_text())
    check(res["format"] == "analysis/1" and len(res["groups"]) == 2, "analyze groups by document")
    check(res["perception"][0]["mode"] == [5], "analyze summarizes perception ratings")
    check([round(v, 12) for v in res["bh"]["adjusted"]] == [0.02, 0.04], "analyze adjusts p")
    res = json.loads(run("analyze", "--table", tmp / "measures.csv", "--by", "participant"))
    check(len(res["groups"]) == 2, "analyze reads its own table")
    run("analyze", "--table", tmp / "measures.csv", "--logs", logs, ok=False)

print("cli smoke ok")
