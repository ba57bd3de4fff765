#include <cstdint>
#include <string>

#include "CLI11.hpp"
#include "lem/cli.hpp"

int main(int argc, char** argv) {
    lem::cli::init_logging();

    CLI::App app{"Local energy market simulator"};
    app.require_subcommand(1);

    lem::cli::RunOptions run;
    std::uint64_t run_seed = 0;
    double dso_penalty = 0.0;
    auto* run_cmd = app.add_subcommand("run", "Run episodes and write per-episode artifacts");
    run_cmd->add_option("--config", run.config, "Scenario JSON")->required();
    auto* run_seed_opt = run_cmd->add_option("--seed", run_seed, "Override episode.seed");
    run_cmd->add_option("--episodes", run.episodes, "Number of episodes")->capture_default_str();
    run_cmd->add_option("--policy", run.policy, "zi | greedy | checkpoint")->capture_default_str();
    run_cmd->add_option("--checkpoint", run.checkpoint, "Checkpoint JSON for --policy checkpoint");
    run_cmd->add_option("--out", run.out, "Output directory")->capture_default_str();
    run_cmd->add_option("--parallel", run.parallel, "Episodes run concurrently")->capture_default_str();
    auto* penalty_opt =
        run_cmd->add_option("--dso-penalty", dso_penalty, "Override reward.dso_penalty_coeff");

    lem::cli::TrainOptions train;
    std::uint64_t train_seed = 0;
    auto* train_cmd = app.add_subcommand("train", "Train a linear policy with the cross-entropy method");
    train_cmd->add_option("--config", train.config, "Scenario JSON")->required();
    auto* train_seed_opt = train_cmd->add_option("--seed", train_seed, "Override episode.seed");
    train_cmd->add_option("--out", train.out, "Output directory")->capture_default_str();
    train_cmd->add_option("--population", train.population)->capture_default_str();
    train_cmd->add_option("--elite-fraction", train.elite_fraction)->capture_default_str();
    train_cmd->add_option("--iterations", train.iterations, "Iterations (added when resuming)")
        ->capture_default_str();
    train_cmd->add_option("--initial-std", train.initial_std)->capture_default_str();
    train_cmd->add_option("--extra-noise", train.extra_noise)->capture_default_str();
    train_cmd->add_option("--min-std", train.min_std)->capture_default_str();
    train_cmd->add_option("--episodes-per-candidate", train.episodes_per_candidate)
        ->capture_default_str();
    train_cmd->add_option("--fitness", train.fitness, "social | individual")->capture_default_str();
    train_cmd->add_option("--focal-agent", train.focal_agent, "Agent index for individual fitness");
    train_cmd->add_flag("--per-agent", train.per_agent, "One policy per agent");
    train_cmd->add_option("--resume", train.resume, "Continue from a checkpoint");
    train_cmd->add_option("--parallel", train.parallel, "Evaluation threads")->capture_default_str();

    lem::cli::NetworkOptions network;
    auto* net_cmd = app.add_subcommand("network", "Build the trading network from a trade log");
    net_cmd->add_option("trades", network.trades, "trades.jsonl")->required();
    net_cmd->add_option("--out", network.out, "DOT output; JSON is written alongside")->required();
    net_cmd->add_flag("--p2p-only", network.p2p_only, "Exclude DSO settlements");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : lem::cli::kExitConfig;
    }

    if (run_cmd->parsed()) {
        if (*run_seed_opt) run.seed = run_seed;
        if (*penalty_opt) run.dso_penalty = dso_penalty;
        return lem::cli::cmd_run(run);
    }
    if (train_cmd->parsed()) {
        if (*train_seed_opt) train.seed = train_seed;
        return lem::cli::cmd_train(train);
    }
    return lem::cli::cmd_network(network);
}
