#pragma once

#include <sys/wait.h>

#include <array>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

namespace testing_support {

struct CliCase {
    std::string name;
    std::string args;
    int exit_code = 0;
};

// Successful runs have a golden stdout file at golden/<name>.out.
inline const std::vector<CliCase>& golden_cases() {
    static const std::vector<CliCase> cases{
        {"gen_mu", "gen --n 24 --d 8 --seed 7"},
        {"gen_mu_prime", "gen --n 20 --d 4 --variant mu_prime --seed 3"},
        {"gen_mu_double_prime", "gen --n 12 --d 3 --variant mu_double_prime --seed 3"},
        {"forest_triangle", "forest --graph triangle.json"},
        {"forest_empty", "forest --graph empty.json"},
        {"forest_random40", "forest --graph random40.json --delta 0.01 --seed 9"},
        {"forest_edge_list", "forest --graph fixed8.txt --seed 2"},
        {"decompose_barbell", "decompose --graph barbell8.json --eps 0.1 --dmin 1"},
        {"decompose_random40", "decompose --graph random40.json --eps 0.05 --dmin 2"},
        {"hierarchical_t", "hierarchical --graph random40.json --t 2"},
        {"hierarchical_auto", "hierarchical --graph random40.json --auto --d 4 --delta 0.1"},
        {"resistance_pair", "resistance --graph fixed8.txt --pair 0,7"},
        {"resistance_disconnected", "resistance --graph empty.json --pair 0,4"},
        {"resistance_audit", "resistance --graph chain32.json --audit --phi 0.2"},
        {"resistance_audit_sampled", "resistance --graph chain32.json --audit --phi 0.2 --pairs 20 --seed 4"},
        {"kl_bridge", "kl --graph path5.json --edge 0,1"},
        {"kl_triangle", "kl --graph triangle.json --edge 1,2"},
        {"kl_scaling_csv", "experiment kl-scaling --n 32,64 --d 4 --trials 50 --seed 11"},
        {"kl_scaling_json", "experiment kl-scaling --n 16 --d 2 --trials 10 --sampler bernoulli:0.5 --format json"},
        {"distinguish_csv", "experiment distinguish --n 24 --d 4 --s 0,8 --trials 40 --seed 6"},
        {"distinguish_json", "experiment distinguish --n 24 --d 4 --s 4 --trials 20 --sampler level:1 --format json"},
        {"vertex_sample_json", "experiment vertex-sample --n 60 --p 0.5 --trials 5 --seed 2"},
        {"vertex_sample_csv", "experiment vertex-sample --n 60 --p 0.5 --trials 5 --seed 2 --format csv"},
        {"balanced_path_json", "experiment balanced-path --n 64 --d 4 --phi 0.05 --trials 3 --check-path"},
        {"balanced_path_csv", "experiment balanced-path --n 64 --d 4 --phi 0.05 --trials 3 --format csv"},
    };
    return cases;
}

inline const std::vector<CliCase>& exit_code_cases() {
    static const std::vector<CliCase> cases{
        {"help", "--help", 0},
        {"no_subcommand", "", 1},
        {"unknown_flag", "gen --n 10 --d 2 --bogus", 1},
        {"gen_one_layer", "gen --n 10 --d 1", 1},
        {"gen_n_below_d", "gen --n 3 --d 4", 1},
        {"gen_bad_variant", "gen --n 10 --d 2 --variant nu", 1},
        {"decompose_eps_too_big", "decompose --graph triangle.json --eps 0.6", 1},
        {"decompose_eps_zero", "decompose --graph triangle.json --eps 0", 1},
        {"decompose_dmin_zero", "decompose --graph triangle.json --eps 0.1 --dmin 0", 1},
        {"missing_file", "forest --graph nowhere.json", 1},
        {"truncated_json", "forest --graph truncated.json", 1},
        {"self_loop", "forest --graph selfloop.txt", 1},
        {"hierarchical_both", "hierarchical --graph random40.json --t 2 --auto --d 4", 1},
        {"hierarchical_neither", "hierarchical --graph random40.json", 1},
        {"pair_out_of_range", "resistance --graph triangle.json --pair 0,3", 1},
        {"pair_malformed", "resistance --graph triangle.json --pair 0-1", 1},
        {"audit_without_layers", "resistance --graph triangle.json --audit --phi 0.2", 1},
        {"bad_sampler", "experiment kl-scaling --n 32 --sampler some", 1},
        {"certification_gap", "decompose --graph gap.json --eps 0.06 --dmin 2", 2},
        {"kl_non_edge", "kl --graph path5.json --edge 0,2", 3},
    };
    return cases;
}

struct CliRun {
    int exit_code = -1;
    std::string out;
};

// Runs the CLI from the golden input directory so relative paths in the config echo stay stable.
inline CliRun run_cli(const std::string& cli, const std::string& input_dir, const std::string& args, unsigned threads) {
    const std::string command = "cd '" + input_dir + "' && SKETCHLAB_THREADS=" + std::to_string(threads) + " '" + cli +
                                "' " + args + " 2>/dev/null";
    CliRun run;
    FILE* pipe = popen(command.c_str(), "r");
    if (!pipe) return run;
    std::array<char, 4096> buf{};
    std::size_t got = 0;
    while ((got = std::fread(buf.data(), 1, buf.size(), pipe)) > 0) run.out.append(buf.data(), got);
    const int status = pclose(pipe);
    run.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    return run;
}

inline std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    std::ostringstream text;
    text << in.rdbuf();
    return text.str();
}

}  // namespace testing_support
