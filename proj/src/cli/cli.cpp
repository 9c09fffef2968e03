#include "cpv/cli/cli.h"

#include <CLI11.hpp>

#include <cmath>
#include <cstdio>
#include <sstream>

#include "cpv/cli/grad_suite.h"
#include "cpv/common/binary_io.h"
#include "cpv/common/log.h"
#include "cpv/eval/eval.h"
#include "cpv/planner/dataset.h"
#include "cpv/train/checkpoint.h"
#include "cpv/train/trainer.h"

namespace cpv::cli {

namespace {

class UsageError : public std::runtime_error {
 public:
    using std::runtime_error::runtime_error;
};

struct GenDataArgs {
    std::uint64_t seed = 1;
    std::size_t pairs = 0;
    int kmin = 1;
    int kmax = 4;
    double noise = 0.1;
    int retry_budget = 50;
    int step_cap = 100;
    int workers = 1;
    std::string out;
};

struct TrainArgs {
    std::string config;
};

struct EvalArgs {
    std::string checkpoint;
    int skills = 4;
    std::string arm = "1,1";
    int episodes = 100;
    std::uint64_t seed = 0;
    std::string criterion = "contain";
    std::string policy = "model";
    int horizon = 0;
    double ref_noise = 0.1;
    int workers = 1;
    std::string out;
    std::string dataset;
    std::uint64_t init_seed = 1;
};

struct GradArgs {
    std::uint64_t seed = 1;
    double eps = 1e-5;
    int dim = 512;
    std::size_t coords = 8;
    double tol = 1e-4;
};

struct RenderArgs {
    std::uint64_t seed = 1;
    std::string task = "ChopTree";
    std::string dataset;
    std::size_t pair = 0;
    std::size_t frame = 0;
    std::string which = "demo";
    std::string out;
};

struct ReplayArgs {
    std::string dataset;
};

craft::SkillList parse_task(const std::string& text) {
    craft::SkillList task;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        auto s = craft::parse_skill(item);
        if (!s) throw UsageError("unknown skill '" + item + "'");
        task.push_back(*s);
    }
    if (task.empty()) throw UsageError("empty task");
    return task;
}

std::pair<int, int> parse_arm(const std::string& text) {
    const auto sep = text.find_first_of(",+");
    if (sep == std::string::npos) throw UsageError("--arm expects k1,k2");
    try {
        std::size_t used1 = 0, used2 = 0;
        const int k1 = std::stoi(text.substr(0, sep), &used1);
        const std::string rest = text.substr(sep + 1);
        const int k2 = std::stoi(rest, &used2);
        if (used1 != sep || used2 != rest.size() || k1 < 1 || k2 < 0) throw UsageError("");
        return {k1, k2};
    } catch (const std::exception&) {
        throw UsageError("--arm expects k1,k2 with k1 >= 1 and k2 >= 0, got '" + text + "'");
    }
}

std::string fmt_double(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.9g", v);
    return buf;
}

int cmd_gen_data(const GenDataArgs& a, std::ostream& out, std::ostream& err) {
    out << "# gen-data\nseed = " << a.seed << "\npairs = " << a.pairs << "\nkmin = " << a.kmin << "\nkmax = " << a.kmax
        << "\nnoise = " << fmt_double(a.noise) << "\nretry_budget = " << a.retry_budget << "\nstep_cap = " << a.step_cap
        << "\nworkers = " << a.workers << "\nout = " << a.out << '\n';
    if (a.kmin < 1 || a.kmax < a.kmin) {
        err << "gen-data: need 1 <= kmin <= kmax\n";
        return kExitUsage;
    }
    planner::PlannerConfig cfg{a.noise, a.step_cap, a.retry_budget};
    const auto ds = planner::generate_dataset(a.seed, a.pairs, a.kmin, a.kmax, cfg, a.workers);
    planner::save_dataset(ds, a.out);
    std::uint64_t steps = 0;
    for (const auto& p : ds.pairs) steps += p.demo.length;
    out << "wrote " << ds.pairs.size() << " pairs (" << steps << " demo steps) to " << a.out << '\n';
    return kExitOk;
}

int cmd_train(const TrainArgs& a, std::ostream& out) {
    train::TrainConfig cfg;
    try {
        cfg = train::load_config(a.config);
    } catch (const train::ConfigError& e) {
        throw UsageError(e.what());
    }
    out << "# train\n" << train::format_config(cfg);
    out.flush();
    const auto r = train::train(cfg);
    const auto& last = r.rows.back();
    out << "steps = " << r.steps << "\nbest_epoch = " << r.best_epoch << "\nbest_val_il = " << fmt_double(r.best_val_il)
        << "\nfinal_train_accuracy = " << fmt_double(last.train_accuracy)
        << "\nfinal_val_accuracy = " << fmt_double(last.val_accuracy) << "\ncheckpoint = " << r.final_checkpoint.string()
        << "\nbest_checkpoint = " << r.best_checkpoint.string() << "\nmetrics = " << cfg.metrics << '\n';
    return kExitOk;
}

void print_eval_config(const EvalArgs& a, bool compose, std::ostream& out) {
    out << (compose ? "# compose\n" : "# eval\n") << "checkpoint = " << a.checkpoint << '\n';
    if (compose)
        out << "arm = " << a.arm << '\n';
    else
        out << "skills = " << a.skills << '\n';
    out << "episodes = " << a.episodes << "\nseed = " << a.seed << "\ncriterion = " << a.criterion
        << "\npolicy = " << a.policy << "\nhorizon = " << a.horizon << "\nref_noise = " << fmt_double(a.ref_noise)
        << "\nworkers = " << a.workers << "\nout = " << a.out << "\ndataset = " << a.dataset
        << "\ninit_seed = " << a.init_seed << '\n';
}

int cmd_eval(const EvalArgs& a, bool compose, std::ostream& out) {
    print_eval_config(a, compose, out);
    eval::EvalOptions opts;
    opts.policy = *eval::parse_policy(a.policy);
    opts.episodes = a.episodes;
    opts.seed = a.seed;
    opts.criterion = *eval::parse_criterion(a.criterion);
    opts.horizon = a.horizon;
    opts.workers = a.workers;
    opts.reference_noise = a.ref_noise;
    std::optional<model::CpvModel<float>> net;
    if (!a.checkpoint.empty()) net = train::load_checkpoint(a.checkpoint).model;
    if (opts.policy == eval::PolicyKind::Model) {
        if (!net) throw UsageError("--checkpoint is required for the model policy");
        opts.model = &*net;
    }
    if (compose && net && !net->has_encoder())
        out << "note: naive model, references are composed by averaging their frames\n";

    eval::EvalResult r;
    if (compose) {
        const auto [k1, k2] = parse_arm(a.arm);
        r = eval::eval_composition(k1, k2, opts);
    } else {
        r = eval::eval_generalization(a.skills, opts);
    }
    const std::string csv = eval::results_header() + eval::format_result(r);
    out << "horizon_used = " << r.horizon << '\n' << csv;
    if (!a.out.empty()) write_text_atomic(a.out, csv);

    if (!a.dataset.empty()) {
        if (!net || !net->has_encoder()) throw UsageError("--dataset hom gap needs a checkpoint with an encoder");
        const auto ds = planner::load_dataset(a.dataset);
        const auto split = planner::train_validation_split(ds);
        const auto& pairs = split.validation.empty() ? split.train : split.validation;
        model::CpvModel<float> fresh(net->config(), a.init_seed);
        const auto trained = eval::hom_gap(*net, ds, pairs, a.seed);
        const auto init = eval::hom_gap(fresh, ds, pairs, a.seed);
        out << "hom_gap = " << fmt_double(trained.residual) << " (embedding norm " << fmt_double(trained.whole_norm)
            << ")\nhom_gap_fresh_init = " << fmt_double(init.residual) << " (embedding norm "
            << fmt_double(init.whole_norm) << ")\n";
    }
    return kExitOk;
}

int cmd_grad_check(const GradArgs& a, std::ostream& out) {
    out << "# grad-check\nseed = " << a.seed << "\neps = " << fmt_double(a.eps) << "\ndim = " << a.dim
        << "\ncoords = " << a.coords << "\ntol = " << fmt_double(a.tol) << '\n';
    const auto entries = run_grad_suite({a.seed, a.eps, a.dim, a.coords});
    bool ok = true;
    for (const auto& e : entries) {
        const bool pass = e.result.max_rel_error <= a.tol && e.result.checked > 0;
        ok = ok && pass;
        out << (pass ? "PASS " : "FAIL ") << e.name << " max_rel_error=" << fmt_double(e.result.max_rel_error)
            << " checked=" << e.result.checked << " skipped_kinks=" << e.result.skipped_kinks << '\n';
    }
    return ok ? kExitOk : kExitFailure;
}

int cmd_render(const RenderArgs& a, std::ostream& out) {
    out << "# render\nseed = " << a.seed << "\ntask = " << a.task << "\ndataset = " << a.dataset << "\npair = " << a.pair
        << "\nframe = " << a.frame << "\nwhich = " << a.which << "\nout = " << a.out << '\n';
    craft::Observation obs;
    if (a.dataset.empty()) {
        const auto state = craft::sample_env(a.seed, parse_task(a.task));
        out << craft::to_ascii(state);
        obs = craft::render(state);
    } else {
        const auto ds = planner::load_dataset(a.dataset);
        if (a.pair >= ds.pairs.size()) throw UsageError("--pair out of range");
        const auto& traj = a.which == "demo" ? ds.pairs[a.pair].demo : ds.pairs[a.pair].reference;
        if (a.frame >= traj.observations.size()) throw UsageError("--frame out of range");
        obs = traj.observations[a.frame];
    }
    write_file_atomic(a.out, craft::to_ppm(obs));
    out << "wrote " << a.out << '\n';
    return kExitOk;
}

int cmd_replay_check(const ReplayArgs& a, std::ostream& out, std::ostream& err) {
    out << "# replay-check\ndataset = " << a.dataset << '\n';
    const auto ds = planner::load_dataset(a.dataset);
    const auto report = planner::replay_check(ds);
    if (report.checked == 0) err << "warning: dataset has no pairs\n";
    for (const auto& issue : report.issues) out << "FAIL pair " << issue.pair << ": " << issue.reason << '\n';
    out << "checked = " << report.checked << "\npassed = " << report.passed
        << "\nfailed = " << report.checked - report.passed << '\n';
    return report.passed == report.checked ? kExitOk : kExitFailure;
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    init_logging();
    CLI::App app{"Compositional plan vectors: data, training and evaluation"};
    app.require_subcommand(1, 1);

    GenDataArgs gen;
    auto* gen_cmd = app.add_subcommand("gen-data", "Generate a paired demonstration dataset");
    gen_cmd->add_option("--seed", gen.seed, "Dataset seed");
    gen_cmd->add_option("--pairs", gen.pairs, "Number of pairs")->required();
    gen_cmd->add_option("--kmin", gen.kmin, "Minimum task length")->check(CLI::PositiveNumber);
    gen_cmd->add_option("--kmax", gen.kmax, "Maximum task length")->check(CLI::PositiveNumber);
    gen_cmd->add_option("--noise", gen.noise, "Expert action noise")->check(CLI::Range(0.0, 1.0));
    gen_cmd->add_option("--retry-budget", gen.retry_budget, "Environment resamples per trajectory")
        ->check(CLI::PositiveNumber);
    gen_cmd->add_option("--step-cap", gen.step_cap, "Step cap per skill")->check(CLI::PositiveNumber);
    gen_cmd->add_option("--workers", gen.workers, "Worker threads")->check(CLI::PositiveNumber);
    gen_cmd->add_option("--out", gen.out, "Output dataset file")->required();

    TrainArgs tr;
    auto* train_cmd = app.add_subcommand("train", "Train a policy from a key=value config");
    train_cmd->add_option("--config", tr.config, "Config file")->required()->check(CLI::ExistingFile);

    EvalArgs ev;
    auto add_eval_flags = [&ev](CLI::App* cmd) {
        cmd->add_option("--checkpoint", ev.checkpoint, "Model checkpoint");
        cmd->add_option("--episodes", ev.episodes, "Episodes")->check(CLI::NonNegativeNumber);
        cmd->add_option("--seed", ev.seed, "Evaluation seed");
        cmd->add_option("--criterion", ev.criterion, "Success criterion")->check(CLI::IsMember({"contain", "exact"}));
        cmd->add_option("--policy", ev.policy, "Policy")->check(CLI::IsMember({"model", "expert", "random"}));
        cmd->add_option("--horizon", ev.horizon, "Horizon override (0: default rule)")->check(CLI::NonNegativeNumber);
        cmd->add_option("--ref-noise", ev.ref_noise, "Expert noise for reference trajectories")
            ->check(CLI::Range(0.0, 1.0));
        cmd->add_option("--workers", ev.workers, "Worker threads")->check(CLI::PositiveNumber);
        cmd->add_option("--out", ev.out, "Results CSV");
        cmd->add_option("--dataset", ev.dataset, "Also report hom_gap on this dataset's validation split");
        cmd->add_option("--init-seed", ev.init_seed, "Seed of the fresh-init model for hom_gap");
    };
    auto* eval_cmd = app.add_subcommand("eval", "Evaluate generalization to k-skill references");
    add_eval_flags(eval_cmd);
    eval_cmd->add_option("--skills", ev.skills, "Skills per reference task")->check(CLI::PositiveNumber);
    auto* compose_cmd = app.add_subcommand("compose", "Evaluate composition of two references");
    add_eval_flags(compose_cmd);
    compose_cmd->add_option("--arm", ev.arm, "Composition arm k1,k2");

    GradArgs gr;
    auto* grad_cmd = app.add_subcommand("grad-check", "Finite-difference checks of all layers and the total loss");
    grad_cmd->add_option("--seed", gr.seed, "Seed");
    grad_cmd->add_option("--eps", gr.eps, "Finite-difference step")->check(CLI::PositiveNumber);
    grad_cmd->add_option("--dim", gr.dim, "Plan vector size")->check(CLI::PositiveNumber);
    grad_cmd->add_option("--coords", gr.coords, "Coordinates per parameter tensor")->check(CLI::PositiveNumber);
    grad_cmd->add_option("--tol", gr.tol, "Maximum relative error")->check(CLI::PositiveNumber);

    RenderArgs rn;
    auto* render_cmd = app.add_subcommand("render", "Render a state or a stored frame to PPM");
    render_cmd->add_option("--seed", rn.seed, "Environment seed");
    render_cmd->add_option("--task", rn.task, "Comma-separated skills the environment must support");
    render_cmd->add_option("--dataset", rn.dataset, "Render a frame from this dataset instead");
    render_cmd->add_option("--pair", rn.pair, "Pair index");
    render_cmd->add_option("--frame", rn.frame, "Frame index");
    render_cmd->add_option("--which", rn.which, "Trajectory")->check(CLI::IsMember({"demo", "reference"}));
    render_cmd->add_option("--out", rn.out, "Output PPM")->required();

    ReplayArgs rp;
    auto* replay_cmd = app.add_subcommand("replay-check", "Replay every demonstration and verify it");
    replay_cmd->add_option("--dataset", rp.dataset, "Dataset file")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        app.exit(e, out, err);
        return kExitOk;
    } catch (const CLI::ParseError& e) {
        app.exit(e, out, err);
        return kExitUsage;
    }

    try {
        if (gen_cmd->parsed()) return cmd_gen_data(gen, out, err);
        if (train_cmd->parsed()) return cmd_train(tr, out);
        if (eval_cmd->parsed()) return cmd_eval(ev, false, out);
        if (compose_cmd->parsed()) return cmd_eval(ev, true, out);
        if (grad_cmd->parsed()) return cmd_grad_check(gr, out);
        if (render_cmd->parsed()) return cmd_render(rn, out);
        if (replay_cmd->parsed()) return cmd_replay_check(rp, out, err);
    } catch (const UsageError& e) {
        err << "error: " << e.what() << '\n';
        return kExitUsage;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return kExitFailure;
    }
    return kExitUsage;
}

}  // namespace cpv::cli
