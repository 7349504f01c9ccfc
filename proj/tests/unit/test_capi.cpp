// Exercises the shared library through the C header only.

#include "doctest.h"

#include "fccnn/fccnn.h"

#include <unistd.h>

#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

namespace {

struct Dir {
    std::filesystem::path path = std::filesystem::temp_directory_path() / ("fccnn-capi-" + std::to_string(::getpid()));
    Dir() { std::filesystem::create_directories(path); }
    ~Dir() {
        std::error_code ec;
        std::filesystem::remove_all(path, ec);
    }
};

// CIFAR-10 binary batches: record r has label r % 10 and pixels (r + p) % 256.
void write_cifar(const std::filesystem::path& dir, std::size_t per_batch) {
    auto write = [](const std::filesystem::path& f, std::size_t n) {
        std::ofstream out(f, std::ios::binary);
        for (std::size_t r = 0; r < n; ++r) {
            out.put(static_cast<char>(r % 10));
            for (std::size_t p = 0; p < 3072; ++p) out.put(static_cast<char>((r + p) % 256));
        }
    };
    for (int b = 1; b <= 5; ++b) write(dir / ("data_batch_" + std::to_string(b) + ".bin"), per_batch);
    write(dir / "test_batch.bin", 10);
}

struct Counter {
    int calls = 0;
    int last_stage = 0;
};

void on_epoch(const fccnn_epoch_metrics* m, void* user) {
    auto* c = static_cast<Counter*>(user);
    ++c->calls;
    c->last_stage = m->stage;
}

} // namespace

TEST_CASE("version and status names") {
    CHECK(std::strlen(fccnn_version()) > 0);
    CHECK(std::string(fccnn_status_name(FCCNN_OK)) == "ok");
    CHECK(std::string(fccnn_status_name(FCCNN_ERR_IO)) == "io");
}

TEST_CASE("cost counts") {
    uint64_t params = 0, macs = 0;
    REQUIRE(fccnn_count("fc-cnn", 10, &params, &macs) == FCCNN_OK);
    CHECK(params == 22634);
    REQUIRE(fccnn_count("fc-cnn", 100, &params, &macs) == FCCNN_OK);
    CHECK(params == 34244);
    CHECK(macs == 986852);
    CHECK(fccnn_count("vgg", 10, &params, &macs) == FCCNN_ERR_INVALID_ARGUMENT);
    CHECK(std::string(fccnn_last_error()).find("vgg") != std::string::npos);
    char* text = nullptr;
    REQUIRE(fccnn_cost_summary("dcn", 100, &text) == FCCNN_OK);
    CHECK(std::string(text).find("986952") != std::string::npos);
    fccnn_string_free(text);
}

TEST_CASE("model handle lifecycle") {
    Dir dir;
    fccnn_model* m = nullptr;
    REQUIRE(fccnn_model_create("fc-cnn", 10, 3, nullptr, &m) == FCCNN_OK);
    fccnn_model_info info{};
    REQUIRE(fccnn_model_info_get(m, &info) == FCCNN_OK);
    CHECK(std::string(info.kind) == "fc-cnn");
    CHECK(info.param_count == 22634);

    std::vector<float> re(2 * 3072, 0.5f), out_re(20), out_im(20);
    REQUIRE(fccnn_model_forward(m, re.data(), nullptr, 2, out_re.data(), out_im.data()) == FCCNN_OK);
    std::vector<int> cls(2);
    REQUIRE(fccnn_model_predict(m, re.data(), nullptr, 2, cls.data()) == FCCNN_OK);
    int argmax = 0;
    for (int k = 1; k < 10; ++k)
        if (out_re[k] > out_re[argmax]) argmax = k;
    CHECK(cls[0] == argmax);

    const auto ckpt = (dir.path / "ckpt").string();
    REQUIRE(fccnn_model_save(m, ckpt.c_str()) == FCCNN_OK);
    fccnn_model* back = nullptr;
    REQUIRE(fccnn_model_load(ckpt.c_str(), &back) == FCCNN_OK);
    char *fa = nullptr, *fb = nullptr;
    fccnn_model_fingerprint(m, &fa);
    fccnn_model_fingerprint(back, &fb);
    CHECK(std::string(fa) == std::string(fb));
    fccnn_string_free(fa);
    fccnn_string_free(fb);
    fccnn_model_free(back);
    fccnn_model_free(m);

    fccnn_model* none = nullptr;
    CHECK(fccnn_model_load((dir.path / "missing").string().c_str(), &none) == FCCNN_ERR_IO);
    CHECK(none == nullptr);
    CHECK(fccnn_model_create("fc-cnn", 10, 0, nullptr, nullptr) == FCCNN_ERR_INVALID_ARGUMENT);
}

TEST_CASE("dataset loading, evaluation and training") {
    Dir dir;
    write_cifar(dir.path, 4);
    fccnn_dataset* ds = nullptr;
    REQUIRE(fccnn_dataset_load("cifar10", dir.path.c_str(), "test", "lab", 0, 0, &ds) == FCCNN_OK);
    CHECK(fccnn_dataset_size(ds) == 10);
    CHECK(fccnn_dataset_num_classes(ds) == 10);

    fccnn_train_options opts;
    fccnn_train_options_init(&opts);
    CHECK(opts.epochs == 20);
    CHECK(opts.batch_size == 256);
    CHECK(opts.lr == 1e-3);
    CHECK(opts.weight_decay == 0.1);
    const auto data = dir.path.string(), out = (dir.path / "run").string();
    opts.data_dir = data.c_str();
    opts.out_dir = out.c_str();
    opts.encoding = "lab";
    opts.epochs = 1;
    opts.batch_size = 8;
    Counter counter;
    fccnn_train_result result{};
    REQUIRE(fccnn_train(&opts, on_epoch, &counter, &result) == FCCNN_OK);
    CHECK(counter.calls == 2);
    CHECK(counter.last_stage == 2);

    fccnn_model* m = nullptr;
    REQUIRE(fccnn_model_load((dir.path / "run" / "final").string().c_str(), &m) == FCCNN_OK);
    double acc = -1, loss = -1;
    REQUIRE(fccnn_evaluate(m, ds, 4, &acc, &loss) == FCCNN_OK);
    CHECK(acc == doctest::Approx(result.final_test_acc));
    CHECK(loss >= 0.0);
    fccnn_model_free(m);
    fccnn_dataset_free(ds);

    opts.batch_size = 0;
    CHECK(fccnn_train(&opts, nullptr, nullptr, &result) == FCCNN_ERR_INVALID_ARGUMENT);
    CHECK(fccnn_dataset_load("cifar10", "/nonexistent", "test", "rgb", 0, 0, &ds) == FCCNN_ERR_IO);
}

TEST_CASE("gradient check through the C API") {
    double worst = 1.0;
    int passed = 0;
    char* report = nullptr;
    REQUIRE(fccnn_gradcheck(2, 7, &worst, &passed, &report) == FCCNN_OK);
    CHECK(passed == 1);
    CHECK(worst < 1e-4);
    CHECK(std::string(report).find("overall") != std::string::npos);
    fccnn_string_free(report);
}
