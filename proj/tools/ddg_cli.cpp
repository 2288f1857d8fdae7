// Experiment driver for the derivative-free discrete gradient integrators.
//
// Subcommands: integrate, converge, energy-drift, counts, inexactness,
// work-precision, terrain. All emit plot-ready CSV with the configuration
// echoed as '#' comments. Exit codes: 0 success, 1 assertion/convergence
// failure, 2 configuration or I/O error.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "ddg/harness.hpp"
#include "ddg/integrators.hpp"
#include "ddg/systems.hpp"
#include "ddg/terrain.hpp"

namespace {

using namespace ddg;

std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

MethodKind parse_method(const std::string& s) {
    static const std::map<std::string, MethodKind> table = {
        {"ia-df", MethodKind::IA_DF},     {"sia-df", MethodKind::SIA_DF},
        {"sia4-df", MethodKind::SIA4_DF}, {"ia-ad", MethodKind::IA_AD},
        {"sia-ad", MethodKind::SIA_AD},   {"sia4-ad", MethodKind::SIA4_AD},
        {"rk4", MethodKind::RK4}};
    auto it = table.find(s);
    if (it == table.end()) throw CLI::ValidationError("unknown method: " + s);
    return it->second;
}

struct CommonOpts {
    std::string system = "double-pendulum";
    std::vector<std::string> methods = {"sia-df"};
    double h = 0.05;
    long long steps = 100;
    double time = 1.0;
    double tol = 1e-11;
    int max_iter = 20;
    double tau1 = 1e-5;
    double tau2 = 1e-4;
    double noise = 0.0;
    std::uint64_t seed = 0;
    std::string out;

    NewtonConfig newton() const {
        NewtonConfig cfg;
        cfg.tol = tol;
        cfg.max_iter = max_iter;
        cfg.seed = seed;
        cfg.fd.tau1 = tau1;
        cfg.fd.tau2 = tau2;
        return cfg;
    }
};

void add_common(CLI::App* cmd, CommonOpts& o) {
    // free the short -h for the step-size flag below
    cmd->set_help_flag("--help", "print this help message and exit");
    cmd->add_option("--system", o.system, "harmonic | lennard-jones | double-pendulum");
    cmd->add_option("--method", o.methods, "method name(s)");
    cmd->add_option("--h", o.h, "time step");
    cmd->add_option("--steps", o.steps, "number of steps");
    cmd->add_option("--time", o.time, "end time T");
    cmd->add_option("--tol", o.tol, "Newton residual tolerance");
    cmd->add_option("--max-iter", o.max_iter, "Newton iteration cap");
    cmd->add_option("--tau1", o.tau1, "FD step for discrete-gradient Jacobians");
    cmd->add_option("--tau2", o.tau2, "FD step for the Hessian");
    cmd->add_option("--noise", o.noise, "injected evaluation noise bound");
    cmd->add_option("--seed", o.seed, "RNG seed");
    cmd->add_option("--out", o.out, "output CSV path (default stdout)");
}

HamiltonianSystem make_named_system(const std::string& name) {
    if (name == "harmonic") return make_harmonic(2);
    if (name == "lennard-jones" || name == "lj") return make_lennard_jones();
    if (name == "double-pendulum" || name == "dp") return make_double_pendulum();
    throw CLI::ValidationError("unknown system: " + name);
}

Vec default_start(const std::string& name) {
    if (name == "harmonic") return {1.0, 0.0};
    if (name == "lennard-jones" || name == "lj") return {1.21, 0.34};
    return {0.1, 0.2, 0.25, -0.3};
}

struct Out {
    std::ofstream file;
    std::ostream* os = &std::cout;
    explicit Out(const std::string& path) {
        if (!path.empty()) {
            file.open(path);
            if (!file) throw std::runtime_error("cannot open output file: " + path);
            os = &file;
        }
    }
    std::ostream& stream() { return *os; }
};

void echo_config(std::ostream& os, const CommonOpts& o) {
    os << "# system=" << o.system << " h=" << fmt(o.h) << " steps=" << o.steps
       << " time=" << fmt(o.time) << " tol=" << fmt(o.tol) << " max_iter=" << o.max_iter
       << " tau1=" << fmt(o.tau1) << " tau2=" << fmt(o.tau2) << " noise=" << fmt(o.noise)
       << " seed=" << o.seed << "\n";
    os << "# methods=";
    for (std::size_t i = 0; i < o.methods.size(); ++i) os << (i ? "," : "") << o.methods[i];
    os << "\n";
}

template <class F>
void with_system(const CommonOpts& o, F&& run) {
    HamiltonianSystem sys = make_named_system(o.system);
    if (o.noise > 0.0) {
        NoisyHamiltonian noisy{sys, o.noise, o.seed};
        run(noisy);
    } else {
        run(sys);
    }
}

int cmd_integrate(const CommonOpts& o) {
    Out out(o.out);
    std::ostream& os = out.stream();
    echo_config(os, o);
    MethodKind m = parse_method(o.methods.at(0));
    with_system(o, [&](const auto& sys) {
        Trajectory tr = integrate(sys, m, default_start(o.system), o.h, o.steps, o.newton());
        const std::size_t n = tr.states.front().size();
        os << "t";
        for (std::size_t i = 1; i <= n; ++i) os << ",x_" << i;
        os << ",H,newton_iters,residual,evals_cum\n";
        for (std::size_t k = 0; k < tr.states.size(); ++k) {
            os << fmt(tr.times[k]);
            for (double v : tr.states[k]) os << "," << fmt(v);
            os << "," << fmt(tr.energy[k]) << "," << tr.newton_iters[k] << ","
               << fmt(tr.residuals[k]) << "," << tr.evals_cum[k] << "\n";
        }
    });
    return 0;
}

std::vector<double> h_grid(double h_max, int levels) {
    std::vector<double> hs;
    for (int k = 0; k < levels; ++k) hs.push_back(h_max / static_cast<double>(1 << k));
    return hs;
}

int cmd_converge(const CommonOpts& o, double h_max, int levels) {
    if (levels < 3) throw CLI::ValidationError("converge needs at least 3 h-levels");
    Out out(o.out);
    std::ostream& os = out.stream();
    echo_config(os, o);
    std::vector<MethodKind> methods;
    for (const auto& s : o.methods) methods.push_back(parse_method(s));
    std::vector<double> hs = h_grid(h_max, levels);
    with_system(o, [&](const auto& sys) {
        auto results = convergence_study(sys, std::span<const MethodKind>(methods),
                                         default_start(o.system), hs, o.time, o.newton());
        os << "method,h,global_error\n";
        for (const auto& r : results)
            for (const auto& p : r.points)
                os << method_name(r.method) << "," << fmt(p.h) << "," << fmt(p.global_error) << "\n";
        os << "# slopes\n";
        os << "method,slope\n";
        for (const auto& r : results) os << method_name(r.method) << "," << fmt(r.slope) << "\n";
    });
    return 0;
}

int cmd_energy_drift(const CommonOpts& o) {
    Out out(o.out);
    std::ostream& os = out.stream();
    echo_config(os, o);
    os << "method,t,energy_drift\n";
    with_system(o, [&](const auto& sys) {
        for (const auto& ms : o.methods) {
            MethodKind m = parse_method(ms);
            Trajectory tr = integrate(sys, m, default_start(o.system), o.h, o.steps, o.newton());
            std::vector<double> drift = energy_drift(tr);
            for (std::size_t k = 0; k < drift.size(); ++k)
                os << method_name(m) << "," << fmt(tr.times[k]) << "," << fmt(drift[k]) << "\n";
        }
    });
    return 0;
}

int cmd_counts(const CommonOpts& o) {
    Out out(o.out);
    std::ostream& os = out.stream();
    echo_config(os, o);
    os << "method,n,measured,formula\n";
    bool ok = true;
    HamiltonianSystem sys = make_named_system(o.system);
    for (MethodKind m : {MethodKind::IA_DF, MethodKind::SIA_DF, MethodKind::SIA4_DF}) {
        IterationCost cost = measure_newton_iteration(sys, m, default_start(o.system), o.h,
                                                      o.newton());
        os << method_name(m) << "," << sys.n << "," << cost.measured << "," << cost.formula << "\n";
        if (cost.measured != cost.formula) ok = false;
    }
    if (!ok) {
        std::cerr << "evaluation counts do not match the per-iteration formulas\n";
        return 1;
    }
    return 0;
}

int cmd_inexactness(const CommonOpts& o, double h_max, int levels) {
    Out out(o.out);
    std::ostream& os = out.stream();
    echo_config(os, o);
    std::vector<double> hs = h_grid(h_max, levels);
    FDConfig fd = o.newton().fd;
    if (o.noise > 0.0) {
        fd.eps_bar = o.noise;
        auto [t1, t2] = optimal_steps(o.noise);
        fd.tau1 = t1;
        fd.tau2 = t2;
    }
    os << "h,err_s4,err_f,err_fprime,theory_s4,theory_f,theory_fprime\n";
    with_system(o, [&](const auto& sys) {
        auto pts = inexactness_study(sys, default_start(o.system), hs, fd);
        for (const auto& p : pts)
            os << fmt(p.h) << "," << fmt(p.err_s4) << "," << fmt(p.err_f) << ","
               << fmt(p.err_fprime) << "," << fmt(p.theory_s4) << "," << fmt(p.theory_f) << ","
               << fmt(p.theory_fprime) << "\n";
    });
    return 0;
}

int cmd_work_precision(const CommonOpts& o, double h_max, int levels) {
    Out out(o.out);
    std::ostream& os = out.stream();
    echo_config(os, o);
    std::vector<MethodKind> methods;
    for (const auto& s : o.methods) methods.push_back(parse_method(s));
    std::vector<double> hs = h_grid(h_max, levels);
    with_system(o, [&](const auto& sys) {
        auto results = convergence_study(sys, std::span<const MethodKind>(methods),
                                         default_start(o.system), hs, o.time, o.newton());
        os << "method,h,global_error,total_evals,wall_seconds\n";
        for (const auto& r : results)
            for (const auto& p : r.points)
                os << method_name(r.method) << "," << fmt(p.h) << "," << fmt(p.global_error) << ","
                   << p.total_evals << "," << fmt(p.wall_seconds) << "\n";
    });
    return 0;
}

struct TerrainOpts {
    std::string grid_file;
    std::size_t synth_size = 122;
    int synth_bumps = 8;
    Vec start = {0.0, 0.0, -0.1, 0.2};
    std::string raster_out;
    std::size_t raster_size = 61;
    double containment_tol = 1e-6;
};

int cmd_terrain(const CommonOpts& o, const TerrainOpts& t) {
    ElevationGrid grid = t.grid_file.empty() ? synth_grid(o.seed, t.synth_size, t.synth_bumps)
                                             : load_grid(t.grid_file);
    auto pot = std::make_shared<const TerrainPotential>(grid);
    HamiltonianSystem sys = make_topographic(pot);

    NewtonConfig cfg = o.newton();
    Trajectory tr = integrate(sys, MethodKind::SIA_DF, t.start, o.h, o.steps, cfg);
    const double h0 = tr.energy.front();
    ContainmentReport rep = containment_check(tr, h0, *pot, t.containment_tol);

    Out out(o.out);
    std::ostream& os = out.stream();
    echo_config(os, o);
    os << "# H0=" << fmt(h0) << " violations=" << rep.violations
       << " max_excess=" << fmt(rep.max_excess)
       << " max_energy_drift=" << fmt(rep.max_energy_drift) << "\n";
    os << "t,q_1,q_2,p_1,p_2,H,U,contained\n";
    for (std::size_t k = 0; k < tr.states.size(); ++k) {
        const Vec& x = tr.states[k];
        const double u = total_potential(*pot, x[0], x[1]);
        os << fmt(tr.times[k]);
        for (double v : x) os << "," << fmt(v);
        os << "," << fmt(tr.energy[k]) << "," << fmt(u) << ","
           << (u <= h0 + t.containment_tol ? 1 : 0) << "\n";
    }
    if (!t.raster_out.empty()) {
        std::ofstream rf(t.raster_out);
        if (!rf) throw std::runtime_error("cannot open raster file: " + t.raster_out);
        rf << "# H0=" << fmt(h0) << "\n";
        rf << "q_1,q_2,U\n";
        for (std::size_t i = 0; i < t.raster_size; ++i) {
            const double qy = -1.0 + 2.0 * static_cast<double>(i) / (t.raster_size - 1);
            for (std::size_t j = 0; j < t.raster_size; ++j) {
                const double qx = -1.0 + 2.0 * static_cast<double>(j) / (t.raster_size - 1);
                rf << fmt(qx) << "," << fmt(qy) << "," << fmt(total_potential(*pot, qx, qy))
                   << "\n";
            }
        }
    }
    if (rep.violations > 0) {
        std::cerr << "containment violated at " << rep.violations << " of " << rep.checked
                  << " states\n";
        return 1;
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Derivative-free discrete gradient integrators"};
    app.set_help_flag("--help", "print this help message and exit");
    app.require_subcommand(1);
    // key=value lines under a [subcommand] section (or subcommand.key=value);
    // must be given before the subcommand name; explicit flags override it
    app.set_config("--config", "", "flat key=value configuration file");

    CommonOpts o;
    double h_max = 0.1;
    int levels = 6;
    TerrainOpts t;

    auto* integ = app.add_subcommand("integrate", "integrate one trajectory, emit CSV");
    add_common(integ, o);

    auto* conv = app.add_subcommand("converge", "global error vs h, with fitted slopes");
    add_common(conv, o);
    conv->add_option("--h-max", h_max, "largest step size");
    conv->add_option("--levels", levels, "number of halvings");

    auto* drift = app.add_subcommand("energy-drift", "energy error over time");
    add_common(drift, o);

    auto* counts = app.add_subcommand("counts", "per-iteration evaluation counts vs formulas");
    add_common(counts, o);

    auto* inex = app.add_subcommand("inexactness", "S4^tau / F_tau / F'_tau error study");
    add_common(inex, o);
    inex->add_option("--h-max", h_max, "largest step size");
    inex->add_option("--levels", levels, "number of halvings");

    auto* wp = app.add_subcommand("work-precision", "error vs evaluation count and wall time");
    add_common(wp, o);
    wp->add_option("--h-max", h_max, "largest step size");
    wp->add_option("--levels", levels, "number of halvings");

    auto* terr = app.add_subcommand("terrain", "topographic Hamiltonian demonstration");
    add_common(terr, o);
    terr->add_option("--grid", t.grid_file, "elevation grid file (default: synthetic)");
    terr->add_option("--synth-size", t.synth_size, "synthetic grid size");
    terr->add_option("--synth-bumps", t.synth_bumps, "number of Gaussian bumps");
    terr->add_option("--start", t.start, "initial state q1 q2 p1 p2")->expected(4);
    terr->add_option("--raster-out", t.raster_out, "write a U(q) raster CSV here");
    terr->add_option("--raster-size", t.raster_size, "raster resolution per axis");
    // terrain defaults per the demonstration setup
    terr->parse_complete_callback([&] {
        if (!terr->count("--tol")) o.tol = 1e-7;
        if (!terr->count("--h")) o.h = 0.02;
        if (!terr->count("--steps")) o.steps = 5000;
    });

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        if (integ->parsed()) return cmd_integrate(o);
        if (conv->parsed()) return cmd_converge(o, h_max, levels);
        if (drift->parsed()) return cmd_energy_drift(o);
        if (counts->parsed()) return cmd_counts(o);
        if (inex->parsed()) return cmd_inexactness(o, h_max, levels);
        if (wp->parsed()) return cmd_work_precision(o, h_max, levels);
        if (terr->parsed()) return cmd_terrain(o, t);
    } catch (const CLI::ValidationError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const ddg::MaxIterationsExceeded& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 2;
}
