import numpy as np
import pytest

from softcodesign.exceptions import EmptyDesignError, InvalidArgumentError
from softcodesign.objectives import trajectory_metrics
from softcodesign.simulators import (
    SimulatorConfig,
    jumper_config,
    largest_component,
    simulate,
    simulate_jumper,
    simulate_swimmer,
    swimmer_config,
)
from softcodesign.tasks import make_encoder, swimmer_masks


@pytest.fixture(scope="module")
def jump_enc():
    return make_encoder("jump", "basis")


@pytest.fixture(scope="module")
def swim_enc():
    return make_encoder("swim", "basis")


def _jumper_design(enc, amplitude_unit=-1.0, muscle=True):
    d = enc.decode(np.zeros(enc.n_params_))
    labels = np.full_like(d.labels, 2 if muscle else 1)
    # unit -1 maps to the lower amplitude bound (0) and the narrowest pulse
    act = enc.config.actuation.to_physical([0.0, amplitude_unit, -1.0])
    return d.replace(labels=labels, actuation_params=act)


def _swimmer_symmetric(enc, f=4.0, phase=0.0):
    body, up, lo = swimmer_masks(enc.mesh_)
    d = enc.decode(np.zeros(enc.n_params_))
    labels = np.where(body, 1, 0)
    labels[up] = 2
    labels[lo] = 3
    return d.replace(labels=labels, occupancy=body, actuation_params=np.array([f, f, phase]))


def test_config_validation():
    with pytest.raises(InvalidArgumentError):
        SimulatorConfig(dt=0.0)
    with pytest.raises(InvalidArgumentError):
        SimulatorConfig(k_passive=-1.0)
    with pytest.raises(InvalidArgumentError):
        SimulatorConfig(node_mass=0.0)
    assert swimmer_config(drag=3.0).drag == 3.0


def test_largest_component_keeps_biggest_island():
    occ = np.zeros(25, dtype=bool)
    grid = occ.reshape((5, 5), order="F")
    grid[0, 0] = True
    grid[2:5, 2:5] = True
    keep = largest_component(grid.ravel(order="F"), (5, 5))
    assert keep.sum() == 9 and not keep[0]


def test_empty_design_raises(jump_enc):
    d = jump_enc.decode(np.zeros(jump_enc.n_params_))
    empty = d.replace(occupancy=np.zeros_like(d.occupancy), labels=np.zeros_like(d.labels))
    with pytest.raises(EmptyDesignError):
        simulate_jumper(empty, jumper_config())


def test_zero_amplitude_does_not_jump(jump_enc):
    d = _jumper_design(jump_enc, amplitude_unit=-1.0)
    m = trajectory_metrics(simulate_jumper(d, jumper_config()), d)
    assert m.jump <= 0.02


def test_actuated_jumper_leaves_rest(jump_enc):
    d = _jumper_design(jump_enc, amplitude_unit=1.0)
    m = trajectory_metrics(simulate_jumper(d, jumper_config()), d)
    assert m.jump > 0.2 and m.rot < 1e-6


@pytest.mark.parametrize("g", [9.81, 19.62])
def test_resting_under_gravity(jump_enc, g):
    d = _jumper_design(jump_enc, muscle=False)
    cfg = jumper_config(gravity=g, n_steps=3000)
    traj = simulate_jumper(d, cfg)
    pos = traj.positions
    assert np.isfinite(pos).all()
    cell = jump_enc.mesh_.cell_size
    # contact holds: penetration stays tiny and the body comes to rest
    assert pos[:, :, 1].min() >= -1e-2 * cell
    # the centroid settles; residual elastic ringing of single nodes is allowed
    com_y = pos[-200:, :, 1].mean(axis=1)
    assert np.ptp(com_y) < 1e-2 * cell


def test_jumper_is_bit_deterministic(jump_enc):
    d = _jumper_design(jump_enc, amplitude_unit=0.5)
    a = simulate_jumper(d, jumper_config())
    b = simulate_jumper(d, jumper_config())
    assert a.positions.tobytes() == b.positions.tobytes()


def test_swimmer_without_actuation_stays_put(swim_enc):
    d = _swimmer_symmetric(swim_enc)
    d = d.replace(labels=np.where(d.labels > 0, 1, 0))
    m = trajectory_metrics(simulate_swimmer(d, swimmer_config()), d)
    assert abs(m.disp) <= 0.01


def test_symmetric_swimmer_has_no_drift(swim_enc):
    d = _swimmer_symmetric(swim_enc, f=3.0, phase=0.0)
    m = trajectory_metrics(simulate_swimmer(d, swimmer_config()), d)
    assert m.drift <= 0.02


def test_swimmer_momentum_conserved_without_drag(swim_enc):
    d = _swimmer_symmetric(swim_enc)
    d = d.replace(labels=np.where(d.labels > 0, 1, 0))
    cfg = swimmer_config(drag=0.0, n_steps=300)
    n_nodes = simulate_swimmer(d, cfg.replace(n_steps=1)).positions.shape[1]
    v0 = np.random.default_rng(0).normal(size=(n_nodes, 2)) * 0.05
    traj = simulate_swimmer(d, cfg, v0=v0)
    vel = np.diff(traj.positions, axis=0) / cfg.dt
    p = vel.sum(axis=1) * cfg.node_mass
    p0 = v0.sum(axis=0) * cfg.node_mass
    scale = np.abs(v0).sum() * cfg.node_mass
    assert np.abs(p - p0).max() <= 1e-8 * scale


def test_asymmetric_swimmer_moves(swim_enc):
    body, up, lo = swimmer_masks(swim_enc.mesh_)
    back = swim_enc.mesh_.element_centers[:, 0] > 0.5 * swim_enc.mesh_.hi[0]
    d = _swimmer_symmetric(swim_enc, f=8.0, phase=np.pi / 2)
    labels = np.where(body, 1, 0)
    labels[up & back] = 2
    labels[lo & back] = 3
    d = d.replace(labels=labels)
    m = trajectory_metrics(simulate_swimmer(d, swimmer_config()), d)
    assert m.disp > 0.05


def test_random_designs_stay_stable(jump_enc, swim_enc):
    rng = np.random.default_rng(123)
    for i in range(1000):
        task, enc = ("jump", jump_enc) if i % 4 else ("swim", swim_enc)
        d = enc.decode(rng.uniform(-1, 1, enc.n_params_))
        if d.empty:
            continue
        cfg = jumper_config() if task == "jump" else swimmer_config(n_steps=400)
        traj = simulate(task, d, cfg)
        assert np.isfinite(traj.positions).all()
        speed = np.linalg.norm(np.diff(traj.positions, axis=0), axis=2).max() / cfg.dt
        assert speed < 100.0


def test_unknown_task(jump_enc):
    with pytest.raises(InvalidArgumentError):
        simulate("fly", jump_enc.decode(np.zeros(jump_enc.n_params_)), jumper_config())
