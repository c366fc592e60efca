// Command-line front door. Links against the pixeltext C API only; all
// functionality lives behind the shared library.

#include <cstdint>
#include <cstdio>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "pixeltext.h"

namespace {

struct CommonArgs {
    std::string config_path;
    std::vector<std::string> sets;
    std::int64_t seed = -1;
    std::string out_dir;
};

void add_common(CLI::App* cmd, CommonArgs& args) {
    cmd->add_option("--config", args.config_path, "JSON configuration file");
    cmd->add_option("--set", args.sets, "Override a configuration key (key=value), repeatable");
    cmd->add_option("--seed", args.seed, "Run seed (run.seed)");
    cmd->add_option("--out", args.out_dir, "Output directory (run.out_dir)");
}

int fail(pxt_status status) {
    std::fprintf(stderr, "error: %s\n", pxt_last_error());
    // Internal errors also exit 1; 2 and 3 keep their meaning.
    if (status == PXT_ERROR_DATA || status == PXT_ERROR_NUMERIC) {
        return static_cast<int>(status);
    }
    return 1;
}

int apply_common(pxt_config* config, const CommonArgs& args) {
    if (!args.config_path.empty()) {
        pxt_status st = pxt_config_load(config, args.config_path.c_str());
        if (st != PXT_OK) {
            return fail(st);
        }
    }
    for (const std::string& kv : args.sets) {
        std::size_t eq = kv.find('=');
        if (eq == std::string::npos) {
            std::fprintf(stderr, "error: --set expects key=value, got '%s'\n", kv.c_str());
            return 1;
        }
        pxt_status st = pxt_config_set(config, kv.substr(0, eq).c_str(),
                                       kv.substr(eq + 1).c_str());
        if (st != PXT_OK) {
            return fail(st);
        }
    }
    if (args.seed >= 0) {
        pxt_status st =
            pxt_config_set(config, "run.seed", std::to_string(args.seed).c_str());
        if (st != PXT_OK) {
            return fail(st);
        }
    }
    if (!args.out_dir.empty()) {
        pxt_status st = pxt_config_set(config, "run.out_dir", args.out_dir.c_str());
        if (st != PXT_OK) {
            return fail(st);
        }
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"pixeltext: patch-rendered text modeling toolkit"};
    app.require_subcommand(1);
    app.set_version_flag("--version", pxt_version());

    CommonArgs pretrain_args, finetune_args, evaluate_args, render_args, report_args;
    std::string render_text_arg, render_input_arg;

    CLI::App* pretrain = app.add_subcommand("pretrain", "Masked-patch (or masked-token) pretraining");
    add_common(pretrain, pretrain_args);
    CLI::App* finetune = app.add_subcommand("finetune", "Fine-tune on pos, parse or classify");
    add_common(finetune, finetune_args);
    CLI::App* evaluate = app.add_subcommand("evaluate", "Evaluate fine-tuned checkpoints");
    add_common(evaluate, evaluate_args);
    CLI::App* render = app.add_subcommand("render", "Rasterize text to patch-grid PNGs");
    add_common(render, render_args);
    render->add_option("--text", render_text_arg, "Text to render");
    render->add_option("--input", render_input_arg, "File of lines to render");
    CLI::App* report = app.add_subcommand("report", "Aggregate evaluation reports");
    add_common(report, report_args);

    CLI11_PARSE(app, argc, argv);

    pxt_config* config = nullptr;
    pxt_status st = pxt_config_create(&config);
    if (st != PXT_OK) {
        return fail(st);
    }

    int rc = 0;
    if (pretrain->parsed()) {
        rc = apply_common(config, pretrain_args);
        if (rc == 0) {
            st = pxt_run_pretrain(config);
            rc = st == PXT_OK ? 0 : fail(st);
        }
    } else if (finetune->parsed()) {
        rc = apply_common(config, finetune_args);
        if (rc == 0) {
            st = pxt_run_finetune(config);
            rc = st == PXT_OK ? 0 : fail(st);
        }
    } else if (evaluate->parsed()) {
        rc = apply_common(config, evaluate_args);
        if (rc == 0) {
            st = pxt_run_evaluate(config);
            rc = st == PXT_OK ? 0 : fail(st);
        }
    } else if (render->parsed()) {
        rc = apply_common(config, render_args);
        if (rc == 0 && !render_text_arg.empty()) {
            st = pxt_config_set(config, "render.text", render_text_arg.c_str());
            rc = st == PXT_OK ? 0 : fail(st);
        }
        if (rc == 0 && !render_input_arg.empty()) {
            st = pxt_config_set(config, "render.input", render_input_arg.c_str());
            rc = st == PXT_OK ? 0 : fail(st);
        }
        if (rc == 0) {
            st = pxt_run_render(config);
            rc = st == PXT_OK ? 0 : fail(st);
        }
    } else if (report->parsed()) {
        rc = apply_common(config, report_args);
        if (rc == 0) {
            st = pxt_run_report(config);
            rc = st == PXT_OK ? 0 : fail(st);
        }
    }

    pxt_config_free(config);
    return rc;
}
