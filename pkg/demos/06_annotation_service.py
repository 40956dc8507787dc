"""Drive the annotation service end to end through its HTTP API.

Runs the service in-process with a controllable clock, walks one
annotator through the guidelines gate and a few pointwise tasks
(including an early-submit rejection), then prints the QC report and the
exported records.
"""

from fastapi.testclient import TestClient

from prefscale.annotation import CampaignConfig
from prefscale.service import AnnotationService, create_app

clock = {"now": 1_000_000}
config = CampaignConfig(
    campaign_id="demo",
    category="landscape",
    images=tuple(f"img{i:02d}" for i in range(12)),
    annotators=("alice", "bob"),
    pair_budget=30,
    repeats_pointwise=3,
    repeat_gap_pointwise=2,
)
service = AnnotationService([config], clock_ms=lambda: clock["now"])
client = TestClient(create_app(service))

session = client.post("/session", json={"campaign": "demo", "annotator": "alice"}).json()
print("session started:", session["session_id"][:8], "phase:", session["phase"])

gated = client.get(f"/session/{session['session_id']}/task")
print(f"task request during guidelines gate -> HTTP {gated.status_code}, "
      f"retry in {gated.json()['retry_after_ms']} ms")

clock["now"] += 10_000
for step in range(4):
    body = client.get(f"/session/{session['session_id']}/task").json()
    task = body["task"]
    if step == 0:
        early = client.post(
            f"/session/{session['session_id']}/submit",
            json={"task_id": task["task_id"], "response": {d: 3 for d in session["dimensions"]}},
        )
        print(f"submit after 0 ms viewing -> HTTP {early.status_code} (task stays open)")
    clock["now"] += task["min_view_ms"] + 500
    ok = client.post(
        f"/session/{session['session_id']}/submit",
        json={"task_id": task["task_id"],
              "response": {d: 2 + step % 3 for d in session["dimensions"]}},
    )
    print(f"task {task['task_id']} ({task['payload']['image']}) -> HTTP {ok.status_code}")

qc = client.get("/campaign/demo/qc").json()
print("\nQC report for alice:")
for key, value in qc["alice"].items():
    print(f"  {key}: {value}")

export = client.get("/campaign/demo/export").text.strip().splitlines()
print(f"\nexported {len(export)} rating records; first line:")
print(" ", export[0])
