// Acceptance suite: runs every criterion end to end and prints one
// PASS/FAIL line each. Criteria that name a CLI invocation shell out to the
// binary given as argv[1].

#include <array>
#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "supernorm/experiments.hpp"
#include "supernorm/io.hpp"
#include "supernorm/layers.hpp"
#include "supernorm/wl.hpp"

namespace {

using namespace supernorm;
namespace fs = std::filesystem;

int g_failed = 0;

struct Timer {
    std::chrono::steady_clock::time_point start = std::chrono::steady_clock::now();
    double seconds() const {
        return std::chrono::duration_cast<std::chrono::milliseconds>(
                   std::chrono::steady_clock::now() - start)
                   .count() /
               1000.0;
    }
};

void report(int criterion, bool pass, const std::string& what) {
    std::cout << (pass ? "[PASS]" : "[FAIL]") << " criterion " << criterion << ": " << what
              << std::endl;
    if (!pass) ++g_failed;
}

void run_criterion(int criterion, const std::string& name,
                   const std::function<std::pair<bool, std::string>()>& body) {
    try {
        auto [pass, detail] = body();
        report(criterion, pass, name + " - " + detail);
    } catch (const std::exception& e) {
        report(criterion, false, name + " - exception: " + e.what());
    }
}

struct RunResult {
    int exit_code = -1;
    std::string output;
};

RunResult run_cli(const std::string& cmd) {
    RunResult r;
    std::string full = cmd + " 2>&1";
    FILE* pipe = popen(full.c_str(), "r");
    if (!pipe) return r;
    std::array<char, 4096> buf{};
    while (std::size_t got = fread(buf.data(), 1, buf.size(), pipe)) r.output.append(buf.data(), got);
    int status = pclose(pipe);
    r.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    return r;
}

std::vector<double> parse_bracket_list(const std::string& text, const std::string& prefix) {
    auto at = text.find(prefix);
    if (at == std::string::npos) throw DataError("missing line: " + prefix);
    auto open = text.find('[', at);
    auto close = text.find(']', open);
    std::vector<double> out;
    std::string body = text.substr(open + 1, close - open - 1);
    std::istringstream ss(body);
    std::string token;
    while (std::getline(ss, token, ',')) out.push_back(std::stod(token));
    return out;
}

std::string fmt(double v) {
    std::ostringstream ss;
    ss << v;
    return ss.str();
}

// shared margin-test geometry: two unit rows at a prescribed chord distance
std::pair<Matrix, Matrix> unit_pair_with_distance(RandomStream& rng, int d, double chord) {
    Matrix u(1, d);
    double norm = 0.0;
    for (double& v : u.data) v = rng.normal();
    for (double v : u.data) norm += v * v;
    norm = std::sqrt(norm);
    for (double& v : u.data) v /= norm;
    Matrix t(1, d);
    double dot = 0.0;
    for (int j = 0; j < d; ++j) t(0, j) = rng.normal();
    for (int j = 0; j < d; ++j) dot += t(0, j) * u(0, j);
    double tnorm = 0.0;
    for (int j = 0; j < d; ++j) {
        t(0, j) -= dot * u(0, j);
        tnorm += t(0, j) * t(0, j);
    }
    tnorm = std::sqrt(tnorm);
    if (tnorm < 1e-9) return unit_pair_with_distance(rng, d, chord);
    double theta = 2.0 * std::asin(chord / 2.0);
    Matrix v(1, d);
    for (int j = 0; j < d; ++j)
        v(0, j) = std::cos(theta) * u(0, j) + std::sin(theta) * t(0, j) / tnorm;
    return {u, v};
}

double row_distance(const Matrix& m, int a, int b) {
    double s = 0.0;
    for (int j = 0; j < m.cols; ++j) {
        double dd = m(a, j) - m(b, j);
        s += dd * dd;
    }
    return std::sqrt(s);
}

}  // namespace

int main(int argc, char** argv) {
    std::string cli = argc > 1 ? argv[1] : "./tools/supernorm-cli";
    fs::path work = fs::temp_directory_path() / "supernorm_acceptance";
    fs::remove_all(work);
    fs::create_directories(work);
    auto path = [&](const std::string& name) { return (work / name).string(); };

    // 1. WL-beating separation on the canonical pair, via the CLI.
    run_criterion(1, "wl-test separates C6 from 2xC3 beyond 1-WL", [&] {
        auto [c6, two_c3] = canonical_pair_c6_vs_2c3();
        save_dataset(path("c6.jsonl"), {c6});
        save_dataset(path("2c3.jsonl"), {two_c3});
        Timer timer;
        RunResult r = run_cli(cli + " wl-test " + path("c6.jsonl") + " " + path("2c3.jsonl"));
        double secs = timer.seconds();
        bool ok = r.exit_code == 0;
        ok = ok && r.output.find("1-WL: indistinguishable") != std::string::npos;
        ok = ok && r.output.find("xi: distinct") != std::string::npos;
        std::vector<double> spec_a = parse_bracket_list(r.output, "spectrum A:");
        std::vector<double> spec_b = parse_bracket_list(r.output, "spectrum B:");
        const std::vector<double> want_a = {-2, -1, -1, 1, 1, 2};
        const std::vector<double> want_b = {-1, -1, -1, -1, 2, 2};
        ok = ok && spec_a.size() == 6 && spec_b.size() == 6;
        for (int i = 0; i < 6 && ok; ++i) {
            ok = std::abs(spec_a[static_cast<std::size_t>(i)] - want_a[static_cast<std::size_t>(i)]) < 1e-8 &&
                 std::abs(spec_b[static_cast<std::size_t>(i)] - want_b[static_cast<std::size_t>(i)]) < 1e-8;
        }
        ok = ok && secs < 1.0;
        return std::pair<bool, std::string>(ok, "verdict + spectra within 1e-8, " + fmt(secs) + " s");
    });

    // 2. Factor audit at max-n 5.
    run_criterion(2, "audit flags only the cospectral disconnected pair at n<=5", [&] {
        Timer timer;
        RunResult r = run_cli(cli + " audit --max-n 5 --out " + path("audit.json"));
        double secs = timer.seconds();
        bool ok = r.exit_code == 0;
        nlohmann::json reportj = nlohmann::json::parse(read_file(path("audit.json")));
        int connected_collisions = 0;
        bool star_pair = false;
        for (const auto& entry : reportj) {
            Graph a = detail::graph_from_json(entry.at("graph_a"), 0);
            Graph b = detail::graph_from_json(entry.at("graph_b"), 1);
            if (is_connected(a) && is_connected(b)) ++connected_collisions;
            auto deg_sorted = [](const Graph& g) {
                auto d = degrees(g);
                std::sort(d.begin(), d.end());
                return d;
            };
            bool star = deg_sorted(a) == std::vector<int>{1, 1, 1, 1, 4} ||
                        deg_sorted(b) == std::vector<int>{1, 1, 1, 1, 4};
            bool square = deg_sorted(a) == std::vector<int>{0, 2, 2, 2, 2} ||
                          deg_sorted(b) == std::vector<int>{0, 2, 2, 2, 2};
            if (entry.at("n") == 5 && entry.at("m") == 4 && star && square) star_pair = true;
        }
        ok = ok && connected_collisions == 0 && star_pair && secs < 30.0;
        return std::pair<bool, std::string>(
            ok, "0 connected collisions, star/C4+K1 flagged, " + fmt(secs) + " s");
    });

    // 3. Gradient suite via the CLI.
    run_criterion(3, "gradcheck passes at tol 1e-4", [&] {
        Timer timer;
        RunResult r = run_cli(cli + " gradcheck");
        double secs = timer.seconds();
        bool ok = r.exit_code == 0 &&
                  r.output.find("gradient suite passed") != std::string::npos && secs < 60.0;
        return std::pair<bool, std::string>(ok, "exit 0, " + fmt(secs) + " s");
    });

    // 4. Centered-injection identity on 100 random mixed batches.
    run_criterion(4, "centered calibration injection identity < 1e-10", [&] {
        RandomStream rng(404);
        double worst = 0.0;
        for (int trial = 0; trial < 100; ++trial) {
            int d = 1 + rng.below(6);
            std::vector<int> offsets;
            int at = 0;
            int rows = 3 + rng.below(12);
            while (at < rows) {
                at += 1 + rng.below(std::min(5, rows - at));
                offsets.push_back(at);
            }
            int n = offsets.back();
            Matrix h(n, d);
            for (double& v : h.data) v = rng.uniform(-2.0, 2.0);
            std::vector<double> xi;
            for (int i = 0; i < n; ++i) xi.push_back(rng.uniform(0.4, 2.5));
            NodeFactors f = factors_from_xi(xi, offsets);
            Matrix w_rc(1, d);
            for (double& v : w_rc.data) v = rng.uniform(-1.0, 1.0);

            Matrix h_rc = rc_calibrate(h, f.m_rc, offsets, w_rc);
            Tape tape;
            const Matrix& sa = tape.value(tape.segment_mean(tape.constant(h), offsets));
            Matrix delta(n, d);
            for (int i = 0; i < n; ++i)
                for (int j = 0; j < d; ++j)
                    delta(i, j) = w_rc(0, j) * sa(i, j) * f.m_rc[static_cast<std::size_t>(i)];
            for (int j = 0; j < d; ++j) {
                double mh = 0.0, mrc = 0.0, md = 0.0;
                for (int i = 0; i < n; ++i) {
                    mh += h(i, j);
                    mrc += h_rc(i, j);
                    md += delta(i, j);
                }
                mh /= n;
                mrc /= n;
                md /= n;
                for (int i = 0; i < n; ++i) {
                    double lhs = (h_rc(i, j) - mrc) - (h(i, j) - mh);
                    double rhs = delta(i, j) - md;
                    worst = std::max(worst, std::abs(lhs - rhs));
                }
            }
        }
        return std::pair<bool, std::string>(worst < 1e-10, "max deviation " + fmt(worst));
    });

    // 5. Separation margins under the stated preconditions, 200 trials each.
    run_criterion(5, "calibration and enhancement margins hold over 200+200 trials", [&] {
        RandomStream rng(505);
        int rc_violations = 0;
        for (int trial = 0; trial < 200; ++trial) {
            int d = 2 + rng.below(7);
            double eps = rng.uniform(1e-4, 0.1);
            double c1 = rng.uniform(0.5, 2.0);
            auto [hu, hv] = unit_pair_with_distance(rng, d, 0.9 * eps);
            Matrix h(2, d);
            for (int j = 0; j < d; ++j) {
                h(0, j) = hu(0, j);
                h(1, j) = hv(0, j);
            }
            Matrix w_rc(1, d);
            for (int j = 0; j < d; ++j) w_rc(0, j) = rng.uniform() < 0.5 ? c1 : -c1;
            std::vector<double> m_rc = {0.5, 0.5 + 2.2 * eps / c1};
            // preconditions
            double dist = row_distance(h, 0, 1);
            double wnorm = 0.0;
            for (int j = 0; j < d; ++j) wnorm += w_rc(0, j) * w_rc(0, j);
            if (!(dist <= eps) || !(std::sqrt(wnorm) >= c1 - 1e-12) ||
                !((m_rc[1] - m_rc[0]) * std::sqrt(static_cast<double>(d)) >= 2.0 * eps / c1)) {
                ++rc_violations;
                continue;
            }
            Matrix rc = rc_calibrate(h, m_rc, {2}, w_rc);
            if (!(row_distance(rc, 0, 1) >= eps - 1e-9)) ++rc_violations;
        }
        int re_violations = 0;
        for (int trial = 0; trial < 200; ++trial) {
            int d = 2 + rng.below(7);
            double eps = rng.uniform(1e-4, 0.05);
            double t_u = rng.uniform(1.0, 2.0);
            double c2 = t_u * std::sqrt(static_cast<double>(d));
            double t_v = t_u - 1.1 * (1.0 + c2) * eps;
            auto [hu, hv] = unit_pair_with_distance(rng, d, 0.9 * eps);
            Matrix h(2, d);
            for (int j = 0; j < d; ++j) {
                h(0, j) = hu(0, j);
                h(1, j) = hv(0, j);
            }
            std::vector<double> m_re = {t_u, t_v};
            Matrix w_re(1, d, 1.0);
            double pu = 0.0, pdiff = 0.0;
            for (int j = 0; j < d; ++j) {
                double a = std::pow(m_re[0], w_re(0, j));
                double b = std::pow(m_re[1], w_re(0, j));
                pu += a * a;
                pdiff += (a - b) * (a - b);
            }
            if (!(t_v > 0.0) || !(std::sqrt(pu) <= c2 + 1e-12) ||
                !(std::sqrt(pdiff) >= (1.0 + c2) * eps) || !(row_distance(h, 0, 1) <= eps)) {
                ++re_violations;
                continue;
            }
            Matrix scaled = re_scale(h, m_re, w_re);
            if (!(row_distance(scaled, 0, 1) >= eps - 1e-9)) ++re_violations;
        }
        bool ok = rc_violations == 0 && re_violations == 0;
        return std::pair<bool, std::string>(ok, "violations: calibration " +
                                                    std::to_string(rc_violations) + ", enhancement " +
                                                    std::to_string(re_violations));
    });

    // 6. Regular-graph expressivity experiment.
    run_criterion(6, "one-layer ordering: supernorm >= 0.90, batchnorm <= 0.60, gin below", [&] {
        Timer timer;
        RegularTaskConfig cfg;  // 300/class -> 400/100/100, 5 seeds
        RegularReport r = run_regular_graph_experiment(cfg);
        double secs = timer.seconds();
        double bn = r.summary("mlp_batchnorm").mean_test_auc();
        double sn = r.summary("mlp_supernorm").mean_test_auc();
        double gin = r.summary("gin").mean_test_auc();
        bool ok = bn <= 0.60 && sn >= 0.90 && gin < sn && secs < 180.0;
        return std::pair<bool, std::string>(
            ok, "auc bn=" + fmt(bn) + " sn=" + fmt(sn) + " gin=" + fmt(gin) + ", " + fmt(secs) + " s");
    });

    // 7. Oversmoothing experiment at depths 2 and 16.
    run_criterion(7, "depth-16 supernorm beats batchnorm in accuracy and separation ratio", [&] {
        Timer timer;
        OversmoothingConfig cfg;
        cfg.depths = {2, 16};
        OversmoothingReport r = run_oversmoothing_experiment(cfg);
        double secs = timer.seconds();
        const auto& bn2 = r.cell(2, "batchnorm");
        const auto& sn2 = r.cell(2, "supernorm");
        const auto& bn16 = r.cell(16, "batchnorm");
        const auto& sn16 = r.cell(16, "supernorm");
        bool sanity = bn2.mean_acc() >= 0.9 && sn2.mean_acc() >= 0.9;
        bool acc = sn16.mean_acc() > bn16.mean_acc();
        bool ratio = sn16.mean_ratio() >= 1.5 * bn16.mean_ratio();
        bool ok = sanity && acc && ratio && secs < 300.0;
        return std::pair<bool, std::string>(
            ok, "depth16 acc sn=" + fmt(sn16.mean_acc()) + " bn=" + fmt(bn16.mean_acc()) +
                    ", ratio sn=" + fmt(sn16.mean_ratio()) + " bn=" + fmt(bn16.mean_ratio()) +
                    ", depth2 " + fmt(sn2.mean_acc()) + "/" + fmt(bn2.mean_acc()) + ", " +
                    fmt(secs) + " s");
    });

    // 8. Initialization identity on 50 random batches, both modes.
    run_criterion(8, "supernorm at init matches batchnorm within 1e-12", [&] {
        RandomStream rng(808);
        double worst = 0.0;
        for (int trial = 0; trial < 50; ++trial) {
            int d = 1 + rng.below(6);
            std::vector<int> offsets;
            int at = 0;
            int rows = 3 + rng.below(10);
            while (at < rows) {
                at += 1 + rng.below(std::min(4, rows - at));
                offsets.push_back(at);
            }
            int n = offsets.back();
            Matrix h(n, d);
            for (double& v : h.data) v = rng.uniform(-3.0, 3.0);
            std::vector<double> xi;
            for (int i = 0; i < n; ++i) xi.push_back(rng.uniform(0.4, 2.5));
            NodeFactors f = factors_from_xi(xi, offsets);
            SuperNormState st_bn(d), st_sn(d);
            bool eval_mode = trial % 2 == 1;
            if (eval_mode) {
                Tape w1, w2;
                ParamBinding p1(w1), p2(w2);
                batchnorm(w1, p1, w1.leaf(h, false), st_bn);
                supernorm::supernorm(w2, p2, w2.leaf(h, false), f, offsets, st_sn);
                st_bn.training = false;
                st_sn.training = false;
            }
            Tape t1, t2;
            ParamBinding p1(t1), p2(t2);
            const Matrix& bn = t1.value(batchnorm(t1, p1, t1.leaf(h, false), st_bn));
            const Matrix& sn =
                t2.value(supernorm::supernorm(t2, p2, t2.leaf(h, false), f, offsets, st_sn));
            worst = std::max(worst, max_abs_diff(bn, sn));
        }
        return std::pair<bool, std::string>(worst < 1e-12, "max deviation " + fmt(worst));
    });

    // 9. Ablation ordering and weight trajectories.
    run_criterion(9, "full supernorm >= each single-component variant; weights grow from 0", [&] {
        Timer timer;
        RegularTaskConfig cfg;
        RegularReport r = run_ablation(cfg);
        double secs = timer.seconds();
        double full = r.summary("supernorm_full").mean_test_auc();
        double rc_only = r.summary("supernorm_rc_only").mean_test_auc();
        double re_only = r.summary("supernorm_re_only").mean_test_auc();
        double neither = r.summary("supernorm_neither").mean_test_auc();
        bool ordering = full >= rc_only && full >= re_only && full >= neither;
        const auto& fullsum = r.summary("supernorm_full");
        bool weights = true;
        for (std::size_t s = 0; s < fullsum.w_rc_start.size(); ++s) {
            weights = weights && fullsum.w_rc_start[s] == 0.0 && fullsum.w_re_start[s] == 0.0;
            weights = weights && fullsum.w_rc_end[s] > 0.0 && fullsum.w_re_end[s] > 0.0;
        }
        bool ok = ordering && weights;
        return std::pair<bool, std::string>(
            ok, "auc full=" + fmt(full) + " rc=" + fmt(rc_only) + " re=" + fmt(re_only) +
                    " neither=" + fmt(neither) + ", weights 0 -> positive, " + fmt(secs) + " s");
    });

    // 10. Byte-identical reports for identical train invocations.
    run_criterion(10, "repeated train invocations produce byte-identical reports", [&] {
        std::ofstream cfg(path("det.cfg"));
        cfg << "graphs_per_class = 15\nnodes = 8\nhidden_dim = 8\nmax_epochs = 6\nseeds = 2\n"
               "batch_size = 8\n";
        cfg.close();
        std::ofstream ocfg(path("det_over.cfg"));
        ocfg << "depths = 2\nnodes_a = 12\nnodes_b = 28\nmax_epochs = 6\nseeds = 2\nhidden_dim = 8\n";
        ocfg.close();
        bool ok = true;
        for (const std::string& invocation :
             {std::string("train regular --config ") + path("det.cfg") + " --seed 11",
              std::string("train ablation --config ") + path("det.cfg") + " --seed 12",
              std::string("train oversmoothing --config ") + path("det_over.cfg") + " --seed 13"}) {
            RunResult r1 = run_cli(cli + " " + invocation + " --out " + path("out_a"));
            RunResult r2 = run_cli(cli + " " + invocation + " --out " + path("out_b"));
            ok = ok && r1.exit_code == 0 && r2.exit_code == 0;
            std::string exp = invocation.substr(6, invocation.find(' ', 6) - 6);
            for (const std::string& suffix : {"_metrics.csv", "_summary.json"}) {
                std::string fa = path("out_a") + "/" + exp + suffix;
                std::string fb = path("out_b") + "/" + exp + suffix;
                ok = ok && read_file(fa) == read_file(fb);
            }
        }
        return std::pair<bool, std::string>(ok, ok ? "csv and json byte-identical across reruns"
                                                   : "outputs differ");
    });

    std::cout << (g_failed == 0 ? "acceptance: all criteria passed"
                                : "acceptance: " + std::to_string(g_failed) + " criteria FAILED")
              << std::endl;
    fs::remove_all(work);
    return g_failed == 0 ? 0 : 1;
}
