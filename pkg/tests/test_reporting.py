from synclab.flow import ode_flow
from synclab.potential import RadialPotential
from synclab.reporting import (
    write_cartesian_trajectory,
    write_polar_trajectory,
    write_rows_csv,
    write_summary,
)

QUARTIC = RadialPotential.quartic(0.5)


def test_rows_csv_header_and_none_cells(tmp_path):
    path = tmp_path / "rows.csv"
    write_rows_csv(path, ("a", "b"), [[1, None], [2.5, "x"]], "deadbeef", 7)
    lines = path.read_text().splitlines()
    assert lines[0] == "# synclab 0.1.0 config_sha256=deadbeef master_seed=7"
    assert lines[1] == "a,b"
    assert lines[2] == "1,"
    assert lines[3] == "2.5,x"


def test_summary_is_sorted_json_after_header(tmp_path):
    import json
    path = tmp_path / "summary.txt"
    write_summary(path, {"b": 1, "a": float("nan")}, "feed", 0)
    lines = path.read_text().splitlines()
    body = json.loads("\n".join(lines[1:]))
    assert body == {"a": "nan", "b": 1}


def test_cartesian_trajectory_dump(tmp_path):
    traj = ode_flow(QUARTIC, [2.0, 0.0], T=0.01, dt=1e-3, record=True)
    history = traj[:, None, :]  # one point
    path = tmp_path / "traj.csv"
    write_cartesian_trajectory(path, 1e-3, history, labels=[0],
                               config_hash="c0ffee", master_seed=1)
    lines = path.read_text().splitlines()
    assert lines[1] == "t,point_id,x1,x2"
    assert len(lines) == 2 + 11
    first = lines[2].split(",")
    assert first[:2] == ["0.0", "0"]
    assert float(first[2]) == 2.0


def test_polar_trajectory_dump(tmp_path):
    path = tmp_path / "polar.csv"
    write_polar_trajectory(path, 1e-4, [1.0, 1.1], [0.0, 0.1], [0.0, 0.05],
                           config_hash="c0ffee", master_seed=1)
    lines = path.read_text().splitlines()
    assert lines[1] == "t,r_sq,phi,z"
    assert lines[2] == "0.0,1.0,0.0,0.0"
