#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <set>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "rsvlts/augment.hpp"
#include "rsvlts/convert.hpp"
#include "rsvlts/mask_io.hpp"
#include "rsvlts/metrics.hpp"
#include "rsvlts/remote_grounder.hpp"

#include "../tests/support/testgen.hpp"

namespace {

using namespace rsvlts;
namespace tg = rsvlts::testgen;

ConvertConfig make_config(const std::string& space, int bins, int keypoints, double eps) {
    ConvertConfig cfg;
    if (space == "pixel") cfg.mode = CoordMode::pixel;
    else if (space == "normalized") cfg.mode = CoordMode::normalized;
    else throw std::invalid_argument("--space must be 'pixel' or 'normalized'");
    cfg.bins = bins;
    cfg.n_keypoints = keypoints;
    cfg.trace_eps = eps;
    return cfg;
}

int run_convert(const std::string& task, const std::string& input, const std::string& output,
                const ConvertConfig& cfg, const std::string& category_filter) {
    std::vector<InstructionRecord> records;
    if (task == "detection" || task == "seg") {
        for (const SceneAnnotation& sa : read_scenes_file(input)) {
            std::vector<std::string> cats =
                category_filter.empty() ? sa.categories() : std::vector<std::string>{category_filter};
            for (const std::string& cat : cats) {
                records.push_back(task == "detection" ? convert_detection(sa, cat, cfg)
                                                      : convert_segmentation(sa, cat, cfg));
            }
        }
    } else if (task == "change") {
        std::ifstream in(input);
        if (!in) throw std::runtime_error("cannot open input: " + input);
        const std::string base_dir = std::filesystem::path(input).parent_path().string();
        std::string line;
        while (std::getline(in, line)) {
            if (line.empty()) continue;
            const auto j = nlohmann::json::parse(line);
            const auto mask_path = std::filesystem::path(base_dir) / j.at("mask").get<std::string>();
            records.push_back(convert_change(read_mask_file(mask_path.string()),
                                             j.at("imageA").get<std::string>(),
                                             j.at("imageB").get<std::string>(),
                                             j.value("caption", ""), cfg));
        }
    } else if (task == "geoloc") {
        std::ifstream in(input);
        if (!in) throw std::runtime_error("cannot open input: " + input);
        std::string line;
        while (std::getline(in, line)) {
            if (line.empty()) continue;
            const auto j = nlohmann::json::parse(line);
            records.push_back(convert_geoloc(j.at("image").get<std::string>(),
                                             j.at("city").get<std::string>(),
                                             j.at("lat").get<double>(), j.at("lon").get<double>(),
                                             cfg));
        }
    } else {
        throw std::invalid_argument("--task must be detection, seg, change, or geoloc");
    }
    for (const InstructionRecord& r : records) r.validate();
    write_records_file(records, output);
    std::cout << "wrote " << records.size() << " records to " << output << "\n";
    return 0;
}

int run_selfcheck() {
    bool all_ok = true;
    auto report = [&](const std::string& name, bool ok) {
        std::cout << (ok ? "[PASS] " : "[FAIL] ") << name << "\n";
        all_ok = all_ok && ok;
    };

    {  // rotated IoU vs grid-count membership oracle
        tg::Rng rng(11);
        bool ok = true;
        for (int i = 0; i < 40 && ok; ++i) {
            const RotatedBox a = tg::random_box(rng);
            const RotatedBox b = tg::random_box(rng);
            ok = std::abs(rotated_iou(a, b) - tg::grid_iou(a, b, 500)) <= 1e-2;
        }
        report("rotated_iou vs grid-count oracle (40 pairs, tol 1e-2)", ok);
    }
    {  // scanline fill vs per-pixel membership
        tg::Rng rng(12);
        bool ok = true;
        for (int i = 0; i < 25 && ok; ++i) {
            const Polygon poly = tg::random_polygon(rng);
            const BinaryMask mask = rasterize_polygon(poly, 100, 100);
            for (int y = 0; y < 100 && ok; ++y)
                for (int x = 0; x < 100 && ok; ++x)
                    ok = mask.get(x, y) == point_in_polygon({x + 0.5, y + 0.5}, poly);
        }
        report("rasterize_polygon vs point membership (25 polygons)", ok);
    }
    {  // trace-then-rasterize fidelity
        tg::Rng rng(13);
        bool ok = true;
        for (int i = 0; i < 25 && ok; ++i) {
            const BinaryMask blob = tg::random_blob(rng, 80, 80);
            const auto polys = trace_mask_to_polygons(blob, 1.0);
            ok = tg::mask_iou(rasterize_polygons(polys, 80, 80), blob) >= 0.95;
        }
        report("trace+rasterize mask IoU >= 0.95 (25 blobs)", ok);
    }
    {  // iterative resolve vs one-shot brute force
        tg::Rng rng(14);
        bool ok = true;
        for (int i = 0; i < 200 && ok; ++i) {
            const SceneGraph scene = tg::random_scene(rng);
            const tg::GenInstruction gen = tg::random_instruction(rng, scene);
            OracleGrounder grounder(scene);
            const ConditionChain chain = parse_conditions(gen.text);
            auto ids = resolve(chain, grounder).entity_ids;
            std::sort(ids.begin(), ids.end());
            ok = ids == tg::brute_force_resolve(scene, gen);
        }
        report("iterative resolve vs brute-force conjunction (200 scenes)", ok);
    }
    return all_ok ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"set-of-points toolkit for remote-sensing vision-language tasks"};
    app.require_subcommand(1);

    // convert
    auto* convert_cmd = app.add_subcommand("convert", "annotations -> instruction records");
    std::string task, input, output, space = "normalized", category;
    int bins = 1000, keypoints = 3;
    double eps = 1.0;
    convert_cmd->add_option("--task", task, "detection | seg | change | geoloc")->required();
    convert_cmd->add_option("--input", input, "input JSONL")->required();
    convert_cmd->add_option("--output", output, "output records JSONL")->required();
    convert_cmd->add_option("--space", space, "pixel | normalized (default normalized)");
    convert_cmd->add_option("--bins", bins, "bins for normalized mode (default 1000)");
    convert_cmd->add_option("--keypoints", keypoints, "keypoints per seg target (default 3)");
    convert_cmd->add_option("--eps", eps, "polygon simplification epsilon, pixels (default 1)");
    convert_cmd->add_option("--category", category, "restrict to one category");

    // augment
    auto* augment_cmd = app.add_subcommand("augment", "append cyclic-referring counterparts");
    std::string aug_in, aug_out;
    double ratio = 1.0;
    std::uint64_t seed = 0;
    augment_cmd->add_option("--input", aug_in, "input records JSONL")->required();
    augment_cmd->add_option("--output", aug_out, "output records JSONL")->required();
    augment_cmd->add_option("--cyclic-ratio", ratio, "fraction of eligible records (default 1)");
    augment_cmd->add_option("--seed", seed, "sampling seed (default 0)");

    // decompose
    auto* decompose_cmd = app.add_subcommand("decompose", "instruction -> condition chain JSON");
    std::string instruction;
    decompose_cmd->add_option("instruction", instruction, "instruction text")->required();

    // resolve
    auto* resolve_cmd = app.add_subcommand("resolve", "run a condition chain against a grounder");
    std::string res_instruction, scene_path, grounder_url, image_path;
    resolve_cmd->add_option("instruction", res_instruction, "instruction text")->required();
    resolve_cmd->add_option("--scene", scene_path, "scene graph JSON (oracle grounder)");
    resolve_cmd->add_option("--grounder-url", grounder_url,
                            "remote grounder endpoint (or env RSVLTS_GROUNDER_URL)");
    resolve_cmd->add_option("--image", image_path, "image path for the remote grounder");

    // emit-prompts
    auto* emit_cmd = app.add_subcommand("emit-prompts", "seg records -> segmenter prompt JSONL");
    std::string emit_in, emit_out;
    emit_cmd->add_option("--input", emit_in, "seg records JSONL")->required();
    emit_cmd->add_option("--output", emit_out, "prompt file")->required();

    // evaluate
    auto* eval_cmd = app.add_subcommand("evaluate", "score predictions against ground truth");
    std::string gt_path, pred_path, report_json;
    double iou_thresh = 0.5;
    eval_cmd->add_option("--gt", gt_path, "ground-truth records JSONL")->required();
    eval_cmd->add_option("--pred", pred_path, "prediction records JSONL")->required();
    eval_cmd->add_option("--json", report_json, "also write the report JSON here");
    eval_cmd->add_option("--iou", iou_thresh, "detection matching threshold (default 0.5)");

    // selfcheck
    app.add_subcommand("selfcheck", "run the built-in oracle suites");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 1;
    }

    try {
        if (convert_cmd->parsed())
            return run_convert(task, input, output, make_config(space, bins, keypoints, eps),
                               category);
        if (augment_cmd->parsed()) {
            auto records = read_records_file(aug_in);
            write_records_file(augment_corpus(records, ratio, seed), aug_out);
            std::cout << "wrote augmented corpus to " << aug_out << "\n";
            return 0;
        }
        if (decompose_cmd->parsed()) {
            std::cout << chain_to_json(parse_conditions(instruction)) << "\n";
            return 0;
        }
        if (resolve_cmd->parsed()) {
            const ConditionChain chain = parse_conditions(res_instruction);
            ResolveResult result;
            if (!scene_path.empty()) {
                OracleGrounder grounder(read_scene_graph_file(scene_path));
                result = resolve(chain, grounder);
            } else {
                std::string url = grounder_url;
                if (url.empty())
                    if (const char* env = std::getenv("RSVLTS_GROUNDER_URL")) url = env;
                RemoteGrounder grounder({url, image_path});
                result = resolve(chain, grounder);
            }
            for (const ResolveStep& s : result.trace)
                std::cout << "step: " << s.description << "  " << s.in_count << " -> "
                          << s.out_count << "\n";
            std::cout << "answer: " << serialize_answer(result.boxes, CoordSpace{CoordMode::pixel})
                      << "\n";
            return 0;
        }
        if (emit_cmd->parsed()) {
            emit_segmenter_prompts(read_records_file(emit_in), emit_out);
            std::cout << "wrote segmenter prompts to " << emit_out << "\n";
            return 0;
        }
        if (eval_cmd->parsed()) {
            const EvalReport report = evaluate_files(gt_path, pred_path, iou_thresh);
            std::cout << report.to_table();
            if (!report_json.empty()) {
                std::ofstream out(report_json, std::ios::binary);
                if (!out) throw std::runtime_error("cannot write report: " + report_json);
                out << report.to_json() << "\n";
            } else {
                std::cout << report.to_json() << "\n";
            }
            return 0;
        }
        return run_selfcheck();
    } catch (const ParseFailure& e) {
        std::cerr << "parse error: " << e.what() << "\n";
        return 1;
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "i/o error: " << e.what() << "\n";
        return 2;
    }
}
