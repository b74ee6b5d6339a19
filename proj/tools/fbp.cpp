#include <fbp/report.hpp>

#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <sstream>

namespace {

std::vector<double> parse_lambda_list(const std::string& text) {
    std::vector<double> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        size_t used = 0;
        double v = 0.0;
        try {
            v = std::stod(item, &used);
        } catch (const std::exception&) {
            throw fbp::ConfigError("sweep.lambda", "not a number: '" + item + "'");
        }
        if (item.find_first_not_of(" \t", used) != std::string::npos) {
            throw fbp::ConfigError("sweep.lambda", "not a number: '" + item + "'");
        }
        out.push_back(v);
    }
    return out;
}

void print_summary(const fbp::RunOutcome& out) {
    const auto& r = out.report;
    if (r.contains("status")) std::cout << "status: " << r["status"].get<std::string>() << '\n';
    if (r.contains("failure")) std::cout << "failure: " << r["failure"].get<std::string>() << '\n';
    if (r.contains("verifications")) {
        for (const auto& [k, v] : r["verifications"].items()) std::cout << k << ": " << v.get<std::string>() << '\n';
    }
    if (r.contains("rows")) {
        for (const auto& row : r["rows"]) {
            std::cout << "lambda " << row["lambda"] << ": " << row["status"].get<std::string>() << '\n';
        }
    }
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Free boundary problems on Carnot groups"};
    app.require_subcommand(1);
    bool quiet = false;
    app.add_flag("-q,--quiet", quiet, "No progress output");

    std::string config_path;
    auto* solve = app.add_subcommand("solve", "Single mountain-pass solve at eps.start");
    solve->add_option("config", config_path, "Config file")->required();
    auto* cont = app.add_subcommand("continue", "Eps continuation with verification");
    cont->add_option("config", config_path, "Config file")->required();
    auto* sweep = app.add_subcommand("sweep", "Lambda sweep at eps.start");
    sweep->add_option("config", config_path, "Config file")->required();
    std::string lambda_text;
    sweep->add_option("--lambda", lambda_text, "Comma separated lambda values (default: sweep.lambda)");
    std::string dir;
    auto* verify = app.add_subcommand("verify", "Recompute verifications of a run directory");
    verify->add_option("dir", dir, "Run directory")->required();
    std::string report_out;
    verify->add_option("-o,--output", report_out, "Write the verification report here");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? 0 : 2;
    }

    const fbp::ProgressSink progress = quiet ? fbp::ProgressSink{} : [](const std::string& s) { std::cerr << s << '\n'; };
    try {
        fbp::RunOutcome out;
        if (*verify) {
            out = fbp::run_verify(dir);
            const std::string text = fbp::dump_report(out.report);
            if (report_out.empty()) {
                std::cout << text;
            } else {
                std::ofstream(report_out) << text;
                print_summary(out);
            }
            return out.exit_code;
        }
        const fbp::RunConfig cfg = fbp::load_config(config_path);
        if (*solve) {
            out = fbp::run_solve(cfg, progress);
        } else if (*cont) {
            out = fbp::run_continuation(cfg, progress);
        } else {
            const std::vector<double> lambdas = lambda_text.empty() ? cfg.sweep_lambda : parse_lambda_list(lambda_text);
            out = fbp::run_lambda_sweep(cfg, lambdas, progress);
        }
        print_summary(out);
        std::cout << "report: " << cfg.output << "/report.json\n";
        return out.exit_code;
    } catch (const fbp::ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
}
