#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstring>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "pixeltext.h"

namespace fs = std::filesystem;

namespace {

std::string fresh_dir(const std::string& name) {
    std::string path = std::string(PIXELTEXT_TMP_DIR) + "/capi_" + name;
    fs::remove_all(path);
    fs::create_directories(path);
    return path;
}

}  // namespace

TEST_CASE("version and error strings are always available") {
    CHECK(std::string(pxt_version()).find("pixeltext") == 0);
    CHECK(pxt_last_error() != nullptr);
}

TEST_CASE("config handle: set, get, unknown keys") {
    pxt_config* cfg = nullptr;
    REQUIRE(pxt_config_create(&cfg) == PXT_OK);

    char buf[128];
    CHECK(pxt_config_get(cfg, "run.name", buf, sizeof buf) == PXT_OK);
    CHECK(std::string(buf) == "run");

    CHECK(pxt_config_set(cfg, "run.seed", "7") == PXT_OK);
    CHECK(pxt_config_get(cfg, "run.seed", buf, sizeof buf) == PXT_OK);
    CHECK(std::string(buf) == "7");

    CHECK(pxt_config_set(cfg, "bogus.key", "1") == PXT_ERROR_CONFIG);
    CHECK(std::string(pxt_last_error()).find("bogus.key") != std::string::npos);
    CHECK(pxt_config_get(cfg, "also.bogus", buf, sizeof buf) == PXT_ERROR_CONFIG);

    char tiny[2];
    CHECK(pxt_config_get(cfg, "run.name", tiny, sizeof tiny) == PXT_ERROR_CONFIG);

    pxt_config_free(cfg);
    pxt_config_free(nullptr);  // no-op
}

TEST_CASE("rendering handles expose patch geometry") {
    pxt_rendering* r = nullptr;
    REQUIRE(pxt_render_text("Herzlich", 16, &r) == PXT_OK);
    CHECK(pxt_rendering_num_patches(r) == 16);
    CHECK(pxt_rendering_num_text_patches(r) == 4);
    CHECK(pxt_rendering_separator_index(r) == 4);
    CHECK(pxt_rendering_truncated(r) == 0);

    std::vector<float> patches(16 * 256);
    REQUIRE(pxt_rendering_copy_patches(r, patches.data(), patches.size()) == PXT_OK);
    bool any_ink = false;
    for (float v : patches) {
        CHECK((v == 0.0f || v == 1.0f));
        any_ink = any_ink || v == 1.0f;
    }
    CHECK(any_ink);

    std::vector<uint8_t> mask(16);
    REQUIRE(pxt_rendering_copy_mask(r, mask.data(), mask.size()) == PXT_OK);
    CHECK(mask[0] == 1);
    CHECK(mask[4] == 1);
    CHECK(mask[5] == 0);

    CHECK(pxt_rendering_copy_patches(r, patches.data(), 10) == PXT_ERROR_CONFIG);
    pxt_rendering_free(r);
}

TEST_CASE("word rendering spans via the C surface") {
    const char* words[] = {"Herzlich", "willkommen!"};
    pxt_rendering* r = nullptr;
    REQUIRE(pxt_render_words(words, 2, 16, &r) == PXT_OK);
    CHECK(pxt_rendering_num_words(r) == 2);
    uint32_t first = 0, last = 0;
    REQUIRE(pxt_rendering_word_span(r, 0, &first, &last) == PXT_OK);
    CHECK(first == 0);
    CHECK(last == 3);
    REQUIRE(pxt_rendering_word_span(r, 1, &first, &last) == PXT_OK);
    CHECK(first == 4);
    CHECK(last == 9);
    CHECK(pxt_rendering_word_span(r, 2, &first, &last) == PXT_ERROR_CONFIG);

    std::string dir = fresh_dir("png");
    CHECK(pxt_rendering_export_png(r, (dir + "/words.png").c_str()) == PXT_OK);
    CHECK(fs::exists(dir + "/words.png"));
    pxt_rendering_free(r);

    pxt_rendering* bad = nullptr;
    CHECK(pxt_render_words(nullptr, 1, 16, &bad) == PXT_ERROR_CONFIG);
    CHECK(pxt_render_text("ab", 1, &bad) == PXT_ERROR_CONFIG);  // max_patches < 2
}

TEST_CASE("perturbation through the C surface is seeded") {
    char* out1 = nullptr;
    char* out2 = nullptr;
    REQUIRE(pxt_perturb_text("Herzlich willkommen", 0.5, 9, &out1) == PXT_OK);
    REQUIRE(pxt_perturb_text("Herzlich willkommen", 0.5, 9, &out2) == PXT_OK);
    CHECK(std::string(out1) == std::string(out2));
    pxt_string_free(out1);
    pxt_string_free(out2);

    char* same = nullptr;
    REQUIRE(pxt_perturb_text("abc", 0.0, 1, &same) == PXT_OK);
    CHECK(std::string(same) == "abc");
    pxt_string_free(same);

    char* bad = nullptr;
    CHECK(pxt_perturb_text("abc", 2.0, 1, &bad) == PXT_ERROR_CONFIG);
}

TEST_CASE("pipeline and checkpoint inspection through the C surface") {
    std::string out = fresh_dir("run");
    pxt_config* cfg = nullptr;
    REQUIRE(pxt_config_create(&cfg) == PXT_OK);
    for (auto [k, v] : {std::pair<const char*, const char*>{"model.hidden_dim", "16"},
                        {"model.num_layers", "1"},
                        {"model.num_heads", "2"},
                        {"model.mlp_ratio", "2"},
                        {"model.max_positions", "32"},
                        {"render.max_patches", "32"},
                        {"pretrain.corpus", "synthetic-text:12"},
                        {"pretrain.steps", "0"},
                        {"run.name", "capi"}}) {
        REQUIRE(pxt_config_set(cfg, k, v) == PXT_OK);
    }
    REQUIRE(pxt_config_set(cfg, "run.out_dir", out.c_str()) == PXT_OK);
    REQUIRE(pxt_run_pretrain(cfg) == PXT_OK);

    std::string ckpt = out + "/capi/42/checkpoint.pxlm";
    REQUIRE(fs::exists(ckpt));
    pxt_checkpoint* handle = nullptr;
    REQUIRE(pxt_checkpoint_open(ckpt.c_str(), &handle) == PXT_OK);
    CHECK(pxt_checkpoint_tensor_count(handle) > 10);
    char name[256];
    REQUIRE(pxt_checkpoint_tensor_name(handle, 0, name, sizeof name) == PXT_OK);
    CHECK(std::strlen(name) > 0);
    CHECK(pxt_checkpoint_tensor_size(handle, "enc.patch_proj.weight") == 256u * 16u);
    CHECK(pxt_checkpoint_tensor_size(handle, "no.such.tensor") == 0);
    pxt_checkpoint_free(handle);

    pxt_checkpoint* missing = nullptr;
    CHECK(pxt_checkpoint_open((out + "/nope.pxlm").c_str(), &missing) == PXT_ERROR_DATA);

    // Missing corpus path -> config error before compute.
    pxt_config* broken = nullptr;
    REQUIRE(pxt_config_create(&broken) == PXT_OK);
    CHECK(pxt_run_pretrain(broken) == PXT_ERROR_CONFIG);
    pxt_config_free(broken);
    pxt_config_free(cfg);
}

TEST_CASE("render command through the C surface") {
    std::string out = fresh_dir("render");
    pxt_config* cfg = nullptr;
    REQUIRE(pxt_config_create(&cfg) == PXT_OK);
    REQUIRE(pxt_config_set(cfg, "render.text", "Hallo Welt") == PXT_OK);
    REQUIRE(pxt_config_set(cfg, "run.out_dir", out.c_str()) == PXT_OK);
    REQUIRE(pxt_run_render(cfg) == PXT_OK);
    CHECK(fs::exists(out + "/run/render/line_0.png"));
    CHECK(fs::exists(out + "/run/render/spans.txt"));
    pxt_config_free(cfg);
}
