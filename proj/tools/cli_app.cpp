#include "cli_app.hpp"

#include <algorithm>
#include <iostream>
#include <optional>
#include <set>

#include "CLI11.hpp"

#include "padicdiff/analysis.hpp"
#include "padicdiff/model_io.hpp"
#include "padicdiff/reports.hpp"
#include "padicdiff/spectral.hpp"
#include "padicdiff/wavelets.hpp"

namespace padicdiff::cli {

namespace {

struct ModelArgs {
    std::string builtin;
    std::string spec_path;
    int depth = 2;
    long long p = 0; // 0: builtin default
    int n = 0;
};

void add_model_flags(CLI::App* cmd, ModelArgs& args) {
    auto* builtin = cmd->add_option("--builtin", args.builtin, "builtin model: single_ball, p1_q2, triangle");
    auto* spec = cmd->add_option("--spec", args.spec_path, "manifold spec document (JSON)");
    builtin->excludes(spec);
    cmd->add_option("--depth", args.depth, "truncation depth m")->check(CLI::PositiveNumber);
    cmd->add_option("--p", args.p, "prime override for builtins");
    cmd->add_option("--n", args.n, "dimension override for builtins");
}

ManifoldModel make_model(const ModelArgs& args) {
    if (!args.builtin.empty()) {
        BuiltinOptions opts;
        opts.m = args.depth;
        if (args.p != 0) opts.p = args.p;
        if (args.n != 0) opts.n = args.n;
        return builtin_model(args.builtin, opts);
    }
    if (!args.spec_path.empty()) return load_model_file(args.spec_path);
    throw validation_error("exactly one model source is required (--builtin or --spec)");
}

KernelSpec make_kernel(const std::string& family, double alpha, int k) {
    if (family == "vt") return KernelSpec::vt(alpha);
    if (family == "knn") return KernelSpec::knn(alpha, k);
    throw validation_error("unknown kernel family '" + family + "' (use vt or knn)");
}

std::vector<CellIndex> parse_omega(const ManifoldModel& model, const std::vector<std::string>& selectors) {
    if (selectors.empty()) throw validation_error("omega: at least one selector is required");
    std::set<std::size_t> seen;
    std::vector<CellIndex> cells;
    for (const auto& spec : selectors) {
        std::size_t pos = 0;
        while (pos <= spec.size()) {
            auto comma = spec.find(',', pos);
            // Commas also separate digits inside a level for n > 1; omega
            // selectors therefore use the compact digit form per level.
            const std::string one = spec.substr(pos, comma == std::string::npos ? std::string::npos : comma - pos);
            if (!one.empty()) {
                const auto [root, prefix] = model.parse_prefix(one);
                const auto range = model.prefix_cell_range(root, prefix);
                for (std::uint64_t o = range.first; o < range.second; ++o) {
                    const CellIndex c{root, o};
                    if (seen.insert(model.cell_linear_index(c)).second) cells.push_back(c);
                }
            }
            if (comma == std::string::npos) break;
            pos = comma + 1;
        }
    }
    std::sort(cells.begin(), cells.end(), [&](const CellIndex& a, const CellIndex& b) {
        return model.cell_linear_index(a) < model.cell_linear_index(b);
    });
    return cells;
}

std::vector<double> parse_rhs(const ManifoldModel& model, const std::string& spec,
                              const std::vector<CellIndex>& omega) {
    if (spec.rfind("const:", 0) == 0) {
        const double v = std::stod(spec.substr(6));
        return std::vector<double>(omega.size(), v);
    }
    if (spec == "measure") {
        std::vector<double> f;
        f.reserve(omega.size());
        for (const auto& c : omega) f.push_back(model.cell_measure(c).to_double());
        return f;
    }
    throw validation_error("right-hand side '" + spec + "' not understood (use const:<v> or measure)");
}

void emit(const std::string& out_dir, const std::string& name, const std::string& content) {
    if (out_dir.empty()) return;
    write_file(out_dir + "/" + name, content);
}

int cmd_inspect(const ModelArgs& margs, const std::string& out_dir) {
    const ManifoldModel model = make_model(margs);
    const std::string doc = inspect_json(model);
    std::cout << doc;
    emit(out_dir, "inspect.json", doc);
    emit(out_dir, "model.json", model_to_json(model));
    return 0;
}

int cmd_distance(const ModelArgs& margs, const std::string& out_dir) {
    const ManifoldModel model = make_model(margs);
    const std::string csv = distances_csv(model);
    if (out_dir.empty()) {
        std::cout << csv;
    } else {
        emit(out_dir, "distances.csv", csv);
        std::cout << "wrote " << out_dir << "/distances.csv (" << model.cell_count() << " cells)\n";
    }
    return 0;
}

int cmd_assemble(const ModelArgs& margs, const std::string& family, double alpha, int k,
                 const std::string& out_dir) {
    const ManifoldModel model = make_model(margs);
    const KernelSpec kernel = make_kernel(family, alpha, k);
    const OperatorMatrix L = assemble_kernel(model, kernel);
    const std::string text = matrix_text(model, L, kernel.describe());
    if (out_dir.empty()) {
        std::cout << text;
    } else {
        emit(out_dir, "matrix.txt", text);
        emit(out_dir, "matrix.csv", matrix_csv(L.entries));
        std::cout << "wrote " << out_dir << "/matrix.txt (" << L.entries.rows << " x " << L.entries.cols
                  << ", balance defect " << fmt_double(L.balance_defect) << ")\n";
    }
    return 0;
}

int cmd_spectrum(const ModelArgs& margs, const std::string& family, double alpha, int k,
                 const std::string& out_dir) {
    const ManifoldModel model = make_model(margs);
    const KernelSpec kernel = make_kernel(family, alpha, k);
    const OperatorMatrix L = assemble_kernel(model, kernel);
    const SpectrumReport report = spectrum(L);
    const std::string csv = spectrum_csv(report);
    std::cout << csv;
    emit(out_dir, "spectrum.csv", csv);
    return 0;
}

int cmd_wavelets_verify(const ModelArgs& margs, const std::string& family, double alpha, int k, double tol,
                        const std::string& out_dir) {
    const ManifoldModel model = make_model(margs);
    const KernelSpec kernel = make_kernel(family, alpha, k);
    const auto rows = wavelet_verification(model, kernel);
    const std::string csv = wavelet_report_csv(model, rows);
    emit(out_dir, "wavelets.csv", csv);
    if (out_dir.empty()) std::cout << csv;

    double max_residual = 0.0;
    double max_deviation = 0.0;
    for (const auto& r : rows) {
        max_residual = std::max(max_residual, r.residual);
        max_deviation = std::max(max_deviation, std::fabs(r.deviation));
    }
    std::cout << "wavelets: " << rows.size() << ", max residual " << fmt_double(max_residual)
              << ", max closed-form vs oracle local deviation " << fmt_double(max_deviation) << "\n";
    if (max_residual > tol) {
        std::cout << "residual above tolerance " << fmt_double(tol) << "\n";
        return 2;
    }
    return 0;
}

int cmd_heat(const ModelArgs& margs, const std::string& family, double alpha, int k,
             const std::vector<double>& times, int samples, std::uint64_t seed, const std::string& out_dir) {
    const ManifoldModel model = make_model(margs);
    const KernelSpec kernel = make_kernel(family, alpha, k);
    const OperatorMatrix L = assemble_kernel(model, kernel);
    const MarkovReport report = markov_report(L, times, samples, seed);
    const std::string doc = markov_report_json(report);
    std::cout << doc;
    emit(out_dir, "markov.json", doc);
    return report.applicable ? 0 : 2;
}

int cmd_dirichlet(const ModelArgs& margs, double alpha, int k, const std::vector<std::string>& omega_sel,
                  const std::string& rhs, int samples, std::uint64_t seed, const std::string& out_dir) {
    const ManifoldModel model = make_model(margs);
    DirichletProblem problem;
    problem.model = &model;
    problem.alpha = alpha;
    problem.k = k;
    problem.omega = parse_omega(model, omega_sel);
    problem.f = parse_rhs(model, rhs, problem.omega);
    const SolutionReport report = solve_dirichlet(problem, samples, seed);
    const std::string doc = solution_report_json(report);
    std::cout << doc;
    emit(out_dir, "report.json", doc);
    emit(out_dir, "solution.csv", solution_csv(model, report));
    return report.solved ? 0 : 2;
}

int cmd_elliptic(const ModelArgs& margs, double alpha, int k, const std::vector<std::string>& omega_sel,
                 const std::string& rhs, const std::string& frame_path, const std::string& coeffs_path,
                 int samples, std::uint64_t seed, const std::string& out_dir) {
    const ManifoldModel model = make_model(margs);
    const FrameField frame =
        frame_path.empty() ? FrameField::identity(model) : FrameField::from_json_file(model, frame_path);
    const EllipticCoefficients coeffs =
        coeffs_path.empty()
            ? EllipticCoefficients::constant(model, Matrix::identity(static_cast<std::size_t>(model.ctx().n)), 1e-9)
            : EllipticCoefficients::from_json_file(model, coeffs_path);
    const auto omega = parse_omega(model, omega_sel);
    const auto f = parse_rhs(model, rhs, omega);
    const SolutionReport report = solve_elliptic_dirichlet(model, frame, coeffs, alpha, k, omega, f, samples, seed);
    const std::string doc = solution_report_json(report);
    std::cout << doc;
    emit(out_dir, "report.json", doc);
    emit(out_dir, "solution.csv", solution_csv(model, report));
    return report.solved ? 0 : 2;
}

} // namespace

int run(const std::vector<std::string>& args) {
    CLI::App app{"diffusion operators and boundary value problems on glued trees of p-adic balls"};
    app.require_subcommand(1);

    ModelArgs margs;
    std::string out_dir;
    std::string family = "vt";
    double alpha = 1.0;
    int k = 1;
    double tol = 1e-10;
    int samples = 100;
    std::uint64_t seed = 12345;
    std::vector<std::string> omega_sel;
    std::string rhs = "const:1";
    std::string times_text = "0.1,1,10";
    std::string frame_path;
    std::string coeffs_path;

    auto add_common = [&](CLI::App* cmd, bool kernel_flags) {
        add_model_flags(cmd, margs);
        cmd->add_option("--out", out_dir, "output directory");
        if (kernel_flags) {
            cmd->add_option("--kernel", family, "kernel family: vt or knn");
            cmd->add_option("--alpha", alpha, "kernel exponent parameter");
            cmd->add_option("--k", k, "star height threshold (knn)");
        }
        cmd->add_option("--seed", seed, "seed for sampled checks");
        cmd->add_option("--tol", tol, "tolerance override")->check(CLI::PositiveNumber);
        cmd->add_option("--samples", samples, "sample count for randomized checks")->check(CLI::PositiveNumber);
    };

    auto* inspect = app.add_subcommand("inspect", "poset and measure summary");
    add_common(inspect, false);

    auto* distance = app.add_subcommand("distance", "pairwise cell distance table");
    add_common(distance, false);

    auto* assemble = app.add_subcommand("assemble", "operator matrix dump");
    add_common(assemble, true);

    auto* spectrum_cmd = app.add_subcommand("spectrum", "eigenvalues with multiplicities");
    add_common(spectrum_cmd, true);

    auto* wavelets_cmd = app.add_subcommand("wavelets", "wavelet tools");
    wavelets_cmd->require_subcommand(1);
    auto* verify = wavelets_cmd->add_subcommand("verify", "closed-form vs assembled eigenvalue table");
    add_common(verify, true);

    auto* heat = app.add_subcommand("heat", "semigroup diagnostics");
    add_common(heat, true);
    heat->add_option("--times", times_text, "comma-separated positive times");

    auto* dirichlet = app.add_subcommand("dirichlet", "homogeneous boundary value solve");
    add_common(dirichlet, false);
    dirichlet->add_option("--alpha", alpha, "kernel exponent parameter");
    dirichlet->add_option("--k", k, "star height threshold");
    dirichlet->add_option("--omega", omega_sel, "domain selectors (ball-address prefixes)")->required();
    dirichlet->add_option("--f", rhs, "right-hand side: const:<v> or measure");

    auto* elliptic = app.add_subcommand("elliptic", "second-order composite boundary value solve");
    add_common(elliptic, false);
    elliptic->add_option("--alpha", alpha, "kernel exponent parameter");
    elliptic->add_option("--k", k, "star height threshold");
    elliptic->add_option("--omega", omega_sel, "domain selectors (ball-address prefixes)")->required();
    elliptic->add_option("--f", rhs, "right-hand side: const:<v> or measure");
    elliptic->add_option("--frame", frame_path, "frame field document (JSON)");
    elliptic->add_option("--coeffs", coeffs_path, "coefficient field document (JSON)");

    std::vector<const char*> argv;
    argv.push_back("padicdiff");
    for (const auto& a : args) argv.push_back(a.c_str());

    try {
        app.parse(static_cast<int>(argv.size()), argv.data());
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 1;
    }

    try {
        if (inspect->parsed()) return cmd_inspect(margs, out_dir);
        if (distance->parsed()) return cmd_distance(margs, out_dir);
        if (assemble->parsed()) return cmd_assemble(margs, family, alpha, k, out_dir);
        if (spectrum_cmd->parsed()) return cmd_spectrum(margs, family, alpha, k, out_dir);
        if (wavelets_cmd->parsed() && verify->parsed()) {
            return cmd_wavelets_verify(margs, family, alpha, k, tol, out_dir);
        }
        if (heat->parsed()) {
            std::vector<double> times;
            std::size_t pos = 0;
            while (pos <= times_text.size()) {
                auto comma = times_text.find(',', pos);
                times.push_back(std::stod(times_text.substr(pos, comma == std::string::npos ? std::string::npos : comma - pos)));
                if (comma == std::string::npos) break;
                pos = comma + 1;
            }
            return cmd_heat(margs, family, alpha, k, times, samples, seed, out_dir);
        }
        if (dirichlet->parsed()) return cmd_dirichlet(margs, alpha, k, omega_sel, rhs, samples, seed, out_dir);
        if (elliptic->parsed()) {
            return cmd_elliptic(margs, alpha, k, omega_sel, rhs, frame_path, coeffs_path, samples, seed, out_dir);
        }
    } catch (const numeric_error& e) {
        std::cerr << "numerical failure: " << e.what() << "\n";
        return 2;
    } catch (const validation_error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 1;
}

int run(int argc, const char* const* argv) {
    std::vector<std::string> args;
    for (int i = 1; i < argc; ++i) args.emplace_back(argv[i]);
    return run(args);
}

} // namespace padicdiff::cli
