// Command-line front end. Talks to the library only through fccnn.h.

#include "fccnn/fccnn.h"

#include "CLI11.hpp"

#include <cstdio>
#include <cstdlib>
#include <string>

namespace {

// One line on stderr: "error <status> <message>"
int report_error(fccnn_status status, const std::string& message) {
    std::string flat = message;
    for (auto& c : flat)
        if (c == '\n' || c == '\r') c = ' ';
    std::fprintf(stderr, "error %s %s\n", fccnn_status_name(status), flat.c_str());
    return static_cast<int>(status);
}

int check(fccnn_status status) {
    if (status == FCCNN_OK) return 0;
    return report_error(status, fccnn_last_error());
}

void print_progress(const fccnn_epoch_metrics* m, void*) {
    std::printf("stage=%d epoch=%zu iteration=%zu train_loss=%.6f train_acc=%.4f test_acc=%.4f e_thr=%.5f wall_s=%.1f\n",
                m->stage, m->epoch, m->iteration, m->train_loss, m->train_acc, m->test_acc, m->e_thr, m->wall_s);
    std::fflush(stdout);
}

const char* env_data_dir() {
    const char* env = std::getenv("FCCNN_DATA_DIR");
    return env && *env ? env : nullptr;
}

const char* opt(const std::string& s) { return s.empty() ? nullptr : s.c_str(); }

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Fully complex-valued CNN: training, evaluation and cost accounting"};
    app.require_subcommand(1);
    app.set_version_flag("--version", fccnn_version());

    const std::vector<std::string> models{"fc-cnn", "real-cnn", "dcn"};
    const std::vector<std::string> datasets{"cifar10", "cifar100", "svhn-ctns"};
    const std::vector<std::string> encodings{"rgb", "lab", "sliding"};

    // train
    fccnn_train_options topt;
    fccnn_train_options_init(&topt);
    std::string model = "fc-cnn", dataset = "cifar10", data_dir, encoding = "rgb", out = "run";
    std::string gate_scope = "correct-samples", dcn_activation = "crelu";
    bool no_stage2 = false, stage2_reinit = false;
    auto* train = app.add_subcommand("train", "train a model (both stages for fc-cnn) and write a report");
    train->add_option("--model", model)->check(CLI::IsMember(models))->capture_default_str();
    train->add_option("--dataset", dataset)->check(CLI::IsMember(datasets))->capture_default_str();
    train->add_option("--data-dir", data_dir, "defaults to $FCCNN_DATA_DIR");
    train->add_option("--encoding", encoding)->check(CLI::IsMember(encodings))->capture_default_str();
    train->add_option("--epochs", topt.epochs)->check(CLI::PositiveNumber)->capture_default_str();
    train->add_option("--batch-size", topt.batch_size)->check(CLI::PositiveNumber)->capture_default_str();
    train->add_option("--lr", topt.lr)->capture_default_str();
    train->add_option("--beta1", topt.beta1)->capture_default_str();
    train->add_option("--beta2", topt.beta2)->capture_default_str();
    train->add_option("--eps", topt.eps)->capture_default_str();
    train->add_option("--weight-decay", topt.weight_decay)->capture_default_str();
    train->add_option("--seed", topt.seed)->capture_default_str();
    train->add_flag("--no-stage2", no_stage2, "skip head retraining on stored features");
    train->add_flag("--stage2-reinit", stage2_reinit, "draw a fresh head before stage 2");
    train->add_option("--gate-scope", gate_scope)
        ->check(CLI::IsMember({"correct-samples", "whole-batch", "margin-components"}))
        ->capture_default_str();
    train->add_option("--dcn-activation", dcn_activation)
        ->check(CLI::IsMember({"crelu", "cardioid"}))
        ->capture_default_str();
    train->add_option("--train-limit", topt.train_limit, "seeded training subset size (0 = all)");
    train->add_option("--test-limit", topt.test_limit, "seeded test subset size (0 = all)");
    train->add_option("--out", out)->capture_default_str();

    // eval
    std::string checkpoint, eval_dataset = "cifar10", eval_dir, split = "test", eval_encoding = "rgb";
    std::size_t eval_limit = 0;
    std::uint64_t eval_seed = 0;
    auto* eval = app.add_subcommand("eval", "evaluate a checkpoint on a dataset split");
    eval->add_option("--checkpoint", checkpoint)->required();
    eval->add_option("--dataset", eval_dataset)->check(CLI::IsMember(datasets))->capture_default_str();
    eval->add_option("--data-dir", eval_dir, "defaults to $FCCNN_DATA_DIR");
    eval->add_option("--split", split)->check(CLI::IsMember({"train", "test"}))->capture_default_str();
    eval->add_option("--encoding", eval_encoding)->check(CLI::IsMember(encodings))->capture_default_str();
    eval->add_option("--limit", eval_limit, "seeded subset size (0 = all)");
    eval->add_option("--seed", eval_seed, "subset seed");

    // count
    std::string count_model = "fc-cnn";
    std::size_t classes = 10;
    auto* count = app.add_subcommand("count", "parameter and MAC tables");
    count->add_option("--model", count_model)->check(CLI::IsMember(models))->capture_default_str();
    count->add_option("--classes", classes)->check(CLI::PositiveNumber)->capture_default_str();

    // encode
    std::string enc_in, enc_kind, enc_out;
    auto* encode = app.add_subcommand("encode", "re-encode an RGB image tensor file");
    encode->add_option("--in", enc_in)->required();
    encode->add_option("--encoding", enc_kind)->required()->check(CLI::IsMember(encodings));
    encode->add_option("--out", enc_out)->required();

    // gradcheck
    std::size_t points = 10;
    std::uint64_t gc_seed = 7;
    auto* gradcheck = app.add_subcommand("gradcheck", "run the gradient verification suite");
    gradcheck->add_option("--points", points)->check(CLI::PositiveNumber)->capture_default_str();
    gradcheck->add_option("--seed", gc_seed)->capture_default_str();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForVersion& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        return report_error(FCCNN_ERR_INVALID_ARGUMENT, e.what());
    }

    if (*train) {
        topt.model = model.c_str();
        topt.dataset = dataset.c_str();
        topt.data_dir = data_dir.empty() ? env_data_dir() : data_dir.c_str();
        topt.encoding = encoding.c_str();
        topt.out_dir = out.c_str();
        topt.stage2 = no_stage2 ? 0 : 1;
        topt.stage2_reinit = stage2_reinit ? 1 : 0;
        topt.gate_scope = gate_scope.c_str();
        topt.dcn_activation = dcn_activation.c_str();
        fccnn_train_result result;
        if (int rc = check(fccnn_train(&topt, print_progress, nullptr, &result))) return rc;
        std::printf("stage1_test_acc=%.4f final_test_acc=%.4f out=%s\n", result.stage1_test_acc,
                    result.final_test_acc, out.c_str());
        return 0;
    }

    if (*eval) {
        fccnn_model* m = nullptr;
        if (int rc = check(fccnn_model_load(checkpoint.c_str(), &m))) return rc;
        fccnn_dataset* d = nullptr;
        const char* dir = eval_dir.empty() ? env_data_dir() : eval_dir.c_str();
        if (int rc = check(fccnn_dataset_load(eval_dataset.c_str(), dir, split.c_str(), eval_encoding.c_str(),
                                              eval_limit, eval_seed, &d))) {
            fccnn_model_free(m);
            return rc;
        }
        double acc = 0, loss = 0;
        const int rc = check(fccnn_evaluate(m, d, 256, &acc, &loss));
        if (rc == 0) std::printf("samples=%zu accuracy=%.4f loss=%.6f\n", fccnn_dataset_size(d), acc, loss);
        fccnn_dataset_free(d);
        fccnn_model_free(m);
        return rc;
    }

    if (*count) {
        char* text = nullptr;
        if (int rc = check(fccnn_cost_summary(count_model.c_str(), classes, &text))) return rc;
        std::fputs(text, stdout);
        fccnn_string_free(text);
        return 0;
    }

    if (*encode) {
        if (int rc = check(fccnn_encode_ctns(opt(enc_in), enc_kind.c_str(), opt(enc_out)))) return rc;
        std::printf("wrote %s\n", enc_out.c_str());
        return 0;
    }

    if (*gradcheck) {
        double worst = 0;
        int passed = 0;
        char* text = nullptr;
        if (int rc = check(fccnn_gradcheck(points, gc_seed, &worst, &passed, &text))) return rc;
        std::fputs(text, stdout);
        fccnn_string_free(text);
        return passed ? 0 : report_error(FCCNN_ERR_NUMERIC, "gradient check above tolerance");
    }
    return 0;
}
