#include "qsl/errors.hpp"
#include "qsl/pulse_io.hpp"
#include "qsl/sweeps.hpp"

#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <sstream>

using namespace qsl;

namespace {

namespace fs = std::filesystem;

fs::path scratch(const std::string &name)
{
    const fs::path dir = fs::temp_directory_path() / ("qsl_sweeps_" + name);
    fs::remove_all(dir);
    return dir;
}

std::string slurp(const fs::path &p)
{
    std::ifstream in(p);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

SweepSpec quick_spec()
{
    SweepSpec spec;
    spec.grape.max_iterations = 60;
    return spec;
}

} // namespace

TEST_SUITE("sweeps") {

TEST_CASE("grid axes")
{
    GridAxis lin{SweepParam::Detuning, -3.0, 3.0, 61, Spacing::Linear};
    const auto v = lin.values();
    CHECK(v.size() == 61);
    CHECK(v[30] == 0.0);
    for (int i = 0; i < 61; ++i) CHECK(v[i] == -v[60 - i]);

    GridAxis lg{SweepParam::Chi, 1e-5, 1e-1, 17, Spacing::Log};
    const auto w = lg.values();
    CHECK(w.front() == 1e-5);
    CHECK(w.back() == 1e-1);
    CHECK(w[8] == doctest::Approx(1e-3));

    CHECK_THROWS_AS((GridAxis{SweepParam::Chi, 1e-5, 1e-1, 1, Spacing::Log}.validate()), ValidationError);
    CHECK_THROWS_AS((GridAxis{SweepParam::Detuning, -1.0, 1.0, 5, Spacing::Log}.validate()), ValidationError);
    CHECK_THROWS_AS((GridAxis{SweepParam::StepCount, 2.0, 4.0, 10, Spacing::Linear}.validate()), ValidationError);
    CHECK_NOTHROW((GridAxis{SweepParam::StepCount, 4.0, 80.0, 39, Spacing::Linear}.validate()));
}

TEST_CASE("single-point grids are rejected")
{
    SweepSpec spec = quick_spec();
    spec.axes = {{SweepParam::StepDuration, 0.05, 0.05, 1, Spacing::Linear}};
    CHECK_THROWS_AS(sweep_time(spec), ValidationError);
    spec.axes = {{SweepParam::Detuning, -1.0, 2.0, 5, Spacing::Linear}};
    CHECK_THROWS_AS(sweep_detuning(spec), ValidationError);
    spec.axes = {{SweepParam::Chi, 1e-3, 1e-1, 4, Spacing::Linear}};
    CHECK_THROWS_AS(sweep_chi(spec), ValidationError);
}

TEST_CASE("rescale_pulse preserves area")
{
    const PulseSequence p{0.1, {1.0, 2.0, 3.0, 4.0}, {0.0, -1.0, 0.0, 1.0}};
    const PulseSequence same = rescale_pulse(p, 4, 0.1);
    CHECK(same.u1 == p.u1);
    const PulseSequence r = rescale_pulse(p, 8, 0.1);
    double a = 0.0, b = 0.0;
    for (double u : p.u1) a += u * p.dt;
    for (double u : r.u1) b += u * r.dt;
    CHECK(b == doctest::Approx(a));
    CHECK(r.u1[0] == doctest::Approx(0.5));
}

TEST_CASE("closed-system time sweep obeys the pulse-area bound")
{
    SweepSpec spec;
    spec.transfer = {StateLabel::PlusZ, StateLabel::MinusZ};
    spec.params = ModelParams::flux_qubit().with_channels(Channels::none());
    spec.grape.u_max = 2.0;
    spec.grape.n_steps = 10;
    spec.axes = {{SweepParam::StepDuration, 0.05, 0.3, 6, Spacing::Linear}};
    const SweepResult r = sweep_time(spec);
    REQUIRE(r.records.size() == 6);
    for (const SweepRecord &rec : r.records) {
        REQUIRE(rec.ok);
        // each component is clamped, so the largest Rabi rate is sqrt(2) u_max
        if (std::sqrt(2.0) * spec.grape.u_max * rec.total_time >= std::numbers::pi + 1e-9) {
            CHECK(rec.fidelity > 1 - 1e-6);
        } else {
            CHECK(rec.fidelity < 1 - 1e-3);
        }
    }
    CHECK(r.kind == "time");
    CHECK(r.argmax().has_value());
}

TEST_CASE("detuning sweep with a fixed pulse")
{
    SweepSpec spec = quick_spec();
    spec.reoptimize = false;
    spec.axes = {{SweepParam::Detuning, -2.0, 2.0, 5, Spacing::Linear}};
    const SweepResult r = sweep_detuning(spec);
    REQUIRE(r.spec.fixed_pulse);
    const OptimizationReport plain = optimize(spec.grape, density_from_state(StateLabel::PlusX),
                                              density_from_state(StateLabel::MinusX), spec.params);
    CHECK(r.records[2].fidelity == plain.final_fidelity);
    CHECK(r.spec.fixed_pulse->u1 == plain.pulse.u1);

    // a caller-supplied pulse is used as is and left untouched
    SweepSpec fixed = spec;
    fixed.fixed_pulse = PulseSequence::constant(20, 0.075, 0.0, 2.0);
    const PulseSequence before = *fixed.fixed_pulse;
    const SweepResult rf = sweep_detuning(fixed);
    CHECK(rf.spec.fixed_pulse->u2 == before.u2);
    CHECK(fixed.fixed_pulse->u2 == before.u2);
}

TEST_CASE("y-only pulse: +X -> -X detuning response is symmetric")
{
    SweepSpec spec;
    spec.reoptimize = false;
    spec.fixed_pulse = PulseSequence::constant(20, 0.075, 0.0, 0.0);
    for (int j = 0; j < 20; ++j) spec.fixed_pulse->u2[j] = 1.5 + std::sin(0.4 * j);
    spec.axes = {{SweepParam::Detuning, -3.0, 3.0, 13, Spacing::Linear}};
    // beta = J(delta_minus + 2 omega') is the one rate not even in the detuning
    spec.params = ModelParams::flux_qubit().with_channels({true, false, true});
    const SweepResult r = sweep_detuning(spec);
    for (int i = 0; i < 13; ++i) CHECK(std::abs(r.records[i].fidelity - r.records[12 - i].fidelity) < 1e-10);

    spec.params = ModelParams::flux_qubit();
    const SweepResult full = sweep_detuning(spec);
    for (int i = 0; i < 13; ++i) CHECK(std::abs(full.records[i].fidelity - full.records[12 - i].fidelity) < 1e-5);
}

TEST_CASE("chi sweep: band envelope and low-chi limit")
{
    SweepSpec spec = quick_spec();
    spec.axes = {{SweepParam::Chi, 1e-5, 1e-1, 3, Spacing::Log}};
    const SweepResult r = sweep_chi(spec);
    const PulseBand band = r.band();
    for (const SweepRecord &rec : r.records) {
        REQUIRE(rec.pulse);
        for (int j = 0; j < rec.n_steps; ++j) {
            CHECK(band.u1_min[j] <= rec.pulse->u1[j]);
            CHECK(band.u1_max[j] >= rec.pulse->u1[j]);
            CHECK(band.u2_min[j] <= rec.pulse->u2[j]);
            CHECK(band.u2_max[j] >= rec.pulse->u2[j]);
        }
    }
    CHECK(r.records.front().fidelity >= r.records.back().fidelity);

    // chi -> 0 against the dissipation-free model, same pulse
    const ModelParams tiny = ModelParams::flux_qubit().with_chi(1e-5);
    const PulseSequence &pulse = *r.records.front().pulse;
    const DensityMatrix from = density_from_state(StateLabel::PlusX), to = density_from_state(StateLabel::MinusX);
    const double f_tiny = objective(pulse, from, to, tiny);
    const double f_free = objective(pulse, from, to, tiny.with_channels(Channels::none()));
    CHECK(std::abs(f_tiny - f_free) < 1e-4);
}

TEST_CASE("contour shape and ordering")
{
    SweepSpec spec = quick_spec();
    spec.axes = {{SweepParam::Chi, 1e-4, 1e-2, 2, Spacing::Log}, {SweepParam::StepDuration, 0.05, 0.1, 2, Spacing::Linear}};
    spec.workers = 2;
    const SweepResult r = contour_chi_time(spec);
    REQUIRE(r.records.size() == 4);
    const auto m = r.fidelity_matrix();
    CHECK(m.size() == 2);
    CHECK(m[0].size() == 2);
    CHECK(r.records[1].coords == std::vector<double>{1e-4, 0.1});
    CHECK(r.records[2].coords == std::vector<double>{1e-2, 0.05});
    CHECK(m[1][0] == r.records[2].fidelity);
}

TEST_CASE("any point re-runs bit-identically from its record")
{
    SweepSpec spec = quick_spec();
    spec.axes = {{SweepParam::StepDuration, 0.05, 0.1, 3, Spacing::Linear}};
    const SweepResult r = sweep_time(spec);
    const SweepRecord &rec = r.records[2];
    const SweepRecord again = run_sweep_point(r.spec, rec.coords, rec.chain_seed);
    CHECK(again.fidelity == rec.fidelity);
    CHECK(again.pulse->u1 == rec.pulse->u1);
}

TEST_CASE("worker count does not change results")
{
    SweepSpec spec = quick_spec();
    spec.warm_chain = false;
    spec.axes = {{SweepParam::StepDuration, 0.05, 0.1, 4, Spacing::Linear}};
    const SweepResult a = sweep_time(spec);
    spec.workers = 3;
    const SweepResult b = sweep_time(spec);
    for (std::size_t i = 0; i < a.records.size(); ++i) CHECK(a.records[i].fidelity == b.records[i].fidelity);
}

TEST_CASE("failed points are recorded and the sweep continues")
{
    SweepSpec spec = quick_spec();
    spec.reoptimize = false;
    spec.fixed_pulse = PulseSequence::constant(20, 0.075, 0.0, 0.0);
    spec.grape.substeps = 1;
    spec.params = ModelParams(572.3, 0.0, 0.033, 0.8, 0.2);
    spec.axes = {{SweepParam::StepDuration, 0.1, 400.0, 2, Spacing::Linear}};
    spec.params = spec.params.with_chi(1.0);
    const SweepResult r = sweep_time(spec);
    CHECK(r.records[0].ok);
    CHECK_FALSE(r.records[1].ok);
    CHECK(r.records[1].status.rfind("failed: ", 0) == 0);
    CHECK(std::isnan(r.records[1].fidelity));
    CHECK(r.argmax() == 0u);
}

TEST_CASE("output files")
{
    SweepSpec spec = quick_spec();
    spec.axes = {{SweepParam::Chi, 1e-3, 1e-1, 2, Spacing::Log}, {SweepParam::StepDuration, 0.05, 0.1, 2, Spacing::Linear}};
    const SweepResult r = contour_chi_time(spec);
    const fs::path root = scratch("out");
    const fs::path dir = create_run_directory(root, "demo", {}, false);
    CHECK(dir.filename().string().ends_with("_demo"));
    write_sweep_outputs(r, dir);

    const std::string csv = slurp(dir / "sweep.csv");
    CHECK(csv.rfind("chi,dt,total_time,fidelity,status\n", 0) == 0);
    std::istringstream lines(csv);
    std::string line;
    std::getline(lines, line);
    for (const SweepRecord &rec : r.records) {
        std::getline(lines, line);
        CHECK(line.rfind(format_double(rec.chi) + "," + format_double(rec.dt), 0) == 0);
    }
    const PulseDocument p0 = read_pulse_file(dir / "point_0000.json");
    CHECK(p0.pulse.u1 == r.records[0].pulse->u1);
    CHECK(*p0.fidelity == r.records[0].fidelity);
    CHECK(p0.params->chi() == 1e-3);
    const std::string index = slurp(dir / "index.json");
    CHECK(index.find("\"created_at\"") != std::string::npos);
    CHECK(index.find("\"version\"") != std::string::npos);

    CHECK_THROWS_AS(create_run_directory(root, "x", dir, false), IoError);
    CHECK(create_run_directory(root, "x", dir, true) == dir);
    fs::remove_all(root);
}

TEST_CASE("Bloch trajectory export")
{
    const fs::path dir = scratch("bloch");
    fs::create_directories(dir);

    // zero pulse from the bath equilibrium: every row identical
    const ModelParams p = ModelParams::flux_qubit();
    const DensityMatrix bath(CMat2::diag(0.8, 0.2));
    const BlochExport eq =
        bloch_trajectory_export(bath, bath, PulseSequence::constant(4, 0.5, 0.0, 0.0), p, dir / "eq.csv");
    CHECK(eq.trajectory.samples.size() == 65);
    for (const TrajectorySample &s : eq.trajectory.samples) {
        CHECK(std::abs(s.bloch.z - 0.6) < 1e-12);
        CHECK(std::abs(s.rho.purity() - 0.68) < 1e-12);
    }

    // closed-system pi pulse stays on the sphere
    const BlochExport pi = bloch_trajectory_export({StateLabel::PlusZ, StateLabel::MinusZ},
                                                   PulseSequence::constant(10, 0.1, std::numbers::pi, 0.0),
                                                   p.with_channels(Channels::none()), dir / "pi.csv", {16, 2});
    for (const TrajectorySample &s : pi.trajectory.samples) CHECK(std::abs(s.bloch.norm() - 1.0) < 1e-6);
    const std::string csv = slurp(dir / "pi.csv");
    CHECK(csv.rfind("t,x,y,z,purity\n", 0) == 0);

    // optimized open-system endpoint: inside the sphere, fidelity as reported
    GrapeConfig cfg;
    const OptimizationReport rep =
        optimize(cfg, density_from_state(StateLabel::PlusX), density_from_state(StateLabel::MinusX), p);
    const BlochExport ex = bloch_trajectory_export({StateLabel::PlusX, StateLabel::MinusX}, rep.pulse, p,
                                                   dir / "opt.csv", {cfg.substeps, 5});
    CHECK(std::abs(ex.fidelity - rep.final_fidelity) < 1e-10);
    CHECK(ex.trajectory.samples.back().bloch.norm() < 1.0);
    CHECK_THROWS_AS(bloch_trajectory_export({}, rep.pulse, p, dir / "missing" / "x.csv"), IoError);
    fs::remove_all(dir);
}

}
