// reldetect: fine-grained detection from coarse detections, pairwise spatial
// relationships, and a relational knowledge base. Subcommands cover synthetic
// data generation, automatic relationship annotation, relationship-classifier
// training, inference, and mAP@50 evaluation.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "reldet/annotate.hpp"
#include "reldet/dataset.hpp"
#include "reldet/errors.hpp"
#include "reldet/eval.hpp"
#include "reldet/kb.hpp"
#include "reldet/pipeline.hpp"
#include "reldet/relpredict.hpp"
#include "reldet/synthgen.hpp"

namespace {

using namespace reldet;

struct Options {
  // shared
  std::string data, kb_path, out, out_dir = ".";
  std::uint64_t seed = 0;
  double tau_frac = 0.25;
  // gen
  int scenes = 200;
  std::string gen_config, kb_out;
  // annotate
  double fraction = 1.0;
  std::string selection;
  // train
  int iters = 500;
  double learning_rate = 0.5;
  double l2 = 1e-4;
  std::string model_out;
  // infer
  std::string model_path, graph_out;
  double nms_iou = 0.5;
  double rel_threshold = 0.5;
  std::string score_mode = "composed";
  // eval
  std::string pred_path, gt_path, space = "fine", report_out;
  int ap_points = 101;
  // pipeline
  std::string train_path, test_path;
};

ScoreMode parse_score_mode(const std::string& s) {
  if (s == "composed") return ScoreMode::kComposed;
  if (s == "raw") return ScoreMode::kRaw;
  throw ValidationError("score mode must be 'composed' or 'raw'");
}

LabelSpace parse_space(const std::string& s) {
  if (s == "fine") return LabelSpace::kFine;
  if (s == "coarse") return LabelSpace::kCoarse;
  throw ValidationError("label space must be 'fine' or 'coarse'");
}

void run_gen(const Options& opt, bool scenes_passed, bool seed_passed) {
  GenConfig cfg;
  if (!opt.gen_config.empty()) cfg = GenConfig::from_json_file(opt.gen_config);
  if (scenes_passed || opt.gen_config.empty()) cfg.num_scenes = opt.scenes;
  if (seed_passed || opt.gen_config.empty()) cfg.seed = opt.seed;
  save_dataset(gen_dataset(cfg), opt.out);
  if (!opt.kb_out.empty()) {
    std::ofstream kb_file(opt.kb_out);
    if (!kb_file) throw IoError("cannot create kb file: " + opt.kb_out);
    kb_file << default_kb_text();
  }
}

void run_annotate(const Options& opt) {
  Dataset d = load_dataset(opt.data);
  KnowledgeBase kb = KnowledgeBase::load(opt.kb_path, d);
  AutoResult res = auto_annotate_dataset(d, kb, {opt.tau_frac, opt.fraction}, opt.seed);
  save_dataset(res.dataset, opt.out);
  std::string selection = opt.selection.empty() ? opt.out + ".selection.json" : opt.selection;
  save_selection(res, selection);
}

void run_train(const Options& opt) {
  Dataset d = load_dataset(opt.data);
  std::vector<std::string> selected;
  if (!opt.selection.empty()) {
    selected = load_selection(opt.selection);
  } else {
    for (const auto& scene : d.scenes) selected.push_back(scene.image_id);
  }
  auto examples = make_training_set(d, selected, opt.tau_frac);
  TrainConfig cfg{opt.iters, opt.learning_rate, opt.l2, opt.seed};
  RelModel model = train(examples, d.relations, d.num_coarse(), cfg);
  model.save(opt.model_out);
  std::cerr << "trained on " << examples.size() << " pairs from " << selected.size()
            << " scenes\n";
}

void run_infer(const Options& opt) {
  Dataset d = load_dataset(opt.data);
  RelModel model = RelModel::load(opt.model_path);
  KnowledgeBase kb = KnowledgeBase::load(opt.kb_path, d);
  InferConfig cfg{opt.tau_frac, opt.nms_iou, opt.rel_threshold, parse_score_mode(opt.score_mode)};
  std::vector<SceneGraph> graphs;
  Dataset pred = infer_dataset(d, model, kb, cfg, opt.graph_out.empty() ? nullptr : &graphs);
  save_dataset(pred, opt.out);
  if (!opt.graph_out.empty()) save_graphs(graphs, d, opt.graph_out);
}

void run_eval(const Options& opt) {
  Dataset pred = load_dataset(opt.pred_path);
  Dataset gt = load_dataset(opt.gt_path);
  EvalReport report = evaluate_map(pred, gt, parse_space(opt.space), opt.ap_points);
  render_report(report, std::cout);
  if (!opt.report_out.empty()) save_report(report, opt.report_out);
}

void run_pipeline(const Options& opt) {
  std::string train_path = opt.train_path.empty() ? opt.data : opt.train_path;
  std::string test_path = opt.test_path.empty() ? opt.data : opt.test_path;
  if (train_path.empty()) throw ValidationError("pipeline needs --data or --train/--test");

  std::filesystem::create_directories(opt.out_dir);
  auto in_dir = [&](const std::string& name) {
    return (std::filesystem::path(opt.out_dir) / name).string();
  };

  Dataset train_data = load_dataset(train_path);
  Dataset test_data = load_dataset(test_path);
  if (!train_data.same_header(test_data))
    throw ValidationError("train and test datasets have different headers");
  KnowledgeBase kb = KnowledgeBase::load(opt.kb_path, train_data);

  AutoResult annotated =
      auto_annotate_dataset(train_data, kb, {opt.tau_frac, opt.fraction}, opt.seed);
  save_dataset(annotated.dataset, in_dir("annotated.jsonl"));
  save_selection(annotated, in_dir("selection.json"));

  auto examples = make_training_set(annotated.dataset, annotated.selected_ids, opt.tau_frac);
  TrainConfig tcfg{opt.iters, opt.learning_rate, opt.l2, opt.seed};
  RelModel model = examples.empty()
                       ? RelModel::zeros(train_data.relations, train_data.num_coarse())
                       : train(examples, train_data.relations, train_data.num_coarse(), tcfg);
  if (examples.empty())
    std::cerr << "warning: annotated subset has no training pairs; using the zero model\n";
  model.save(in_dir("model.json"));

  InferConfig icfg{opt.tau_frac, opt.nms_iou, opt.rel_threshold, parse_score_mode(opt.score_mode)};
  Dataset pred = infer_dataset(test_data, model, kb, icfg);
  save_dataset(pred, in_dir("predictions.jsonl"));

  EvalReport coarse = evaluate_map(pred, test_data, LabelSpace::kCoarse, opt.ap_points);
  EvalReport fine = evaluate_map(pred, test_data, LabelSpace::kFine, opt.ap_points);
  std::cout << "== coarse ==\n";
  render_report(coarse, std::cout);
  std::cout << "== fine ==\n";
  render_report(fine, std::cout);

  nlohmann::ordered_json combined;
  combined["coarse"] = nlohmann::ordered_json::parse(report_json(coarse));
  combined["fine"] = nlohmann::ordered_json::parse(report_json(fine));
  std::ofstream report_file(in_dir("report.json"));
  if (!report_file) throw IoError("cannot create report file");
  report_file << combined.dump() << "\n";
}

}  // namespace

int main(int argc, char** argv) {
  Options opt;
  CLI::App app{"Fine-grained object detection from relationships and a knowledge base"};
  app.require_subcommand(1);

  auto* gen = app.add_subcommand("gen", "generate a synthetic living-room dataset");
  gen->add_option("--scenes", opt.scenes, "number of scenes")->capture_default_str();
  gen->add_option("--seed", opt.seed, "generator seed")->capture_default_str();
  gen->add_option("--out", opt.out, "output dataset path")->required();
  gen->add_option("--config", opt.gen_config, "generator config JSON");
  gen->add_option("--kb-out", opt.kb_out, "also write the default knowledge base here");

  auto* annotate = app.add_subcommand("annotate", "derive relationship labels (AUTO protocol)");
  annotate->add_option("--data", opt.data, "dataset with fine labels")->required();
  annotate->add_option("--kb", opt.kb_path, "knowledge base file")->required();
  annotate->add_option("--fraction", opt.fraction, "fraction of scenes to annotate")
      ->capture_default_str();
  annotate->add_option("--tau-frac", opt.tau_frac, "tau as a fraction of the image diagonal")
      ->capture_default_str();
  annotate->add_option("--seed", opt.seed, "subset sampling seed")->capture_default_str();
  annotate->add_option("--out", opt.out, "annotated dataset path")->required();
  annotate->add_option("--selection", opt.selection,
                       "sidecar JSON path (default: <out>.selection.json)");

  auto* train_cmd = app.add_subcommand("train", "train the relationship classifier");
  train_cmd->add_option("--data", opt.data, "annotated dataset")->required();
  train_cmd->add_option("--selection", opt.selection, "sidecar from annotate (default: all scenes)");
  train_cmd->add_option("--tau-frac", opt.tau_frac, "pair neighborhood radius fraction")
      ->capture_default_str();
  train_cmd->add_option("--iters", opt.iters, "gradient descent iterations")->capture_default_str();
  train_cmd->add_option("--lr", opt.learning_rate, "learning rate")->capture_default_str();
  train_cmd->add_option("--l2", opt.l2, "L2 regularization weight")->capture_default_str();
  train_cmd->add_option("--seed", opt.seed, "training seed")->capture_default_str();
  train_cmd->add_option("--out", opt.model_out, "model output path")->required();

  auto* infer = app.add_subcommand("infer", "predict fine-grained detections");
  infer->add_option("--data", opt.data, "dataset with detector outputs")->required();
  infer->add_option("--model", opt.model_path, "trained relationship model")->required();
  infer->add_option("--kb", opt.kb_path, "knowledge base file")->required();
  infer->add_option("--tau-frac", opt.tau_frac, "neighborhood radius fraction")
      ->capture_default_str();
  infer->add_option("--nms-iou", opt.nms_iou, "NMS IoU threshold")->capture_default_str();
  infer->add_option("--rel-threshold", opt.rel_threshold, "graph export probability threshold")
      ->capture_default_str();
  infer->add_option("--score-mode", opt.score_mode, "composed|raw")->capture_default_str();
  infer->add_option("--out", opt.out, "prediction dataset path")->required();
  infer->add_option("--emit-graph", opt.graph_out, "write per-scene relation arrows as JSON");

  auto* eval_cmd = app.add_subcommand("eval", "COCO-style mAP@50 evaluation");
  eval_cmd->add_option("--pred", opt.pred_path, "prediction dataset")->required();
  eval_cmd->add_option("--gt", opt.gt_path, "ground-truth dataset")->required();
  eval_cmd->add_option("--space", opt.space, "fine|coarse")->capture_default_str();
  eval_cmd->add_option("--ap-points", opt.ap_points, "recall interpolation points (101 or 11)")
      ->capture_default_str();
  eval_cmd->add_option("--out", opt.report_out, "also write report JSON here");

  auto* pipe = app.add_subcommand("pipeline", "annotate, train, infer, and evaluate");
  pipe->add_option("--data", opt.data, "dataset used for both training and testing");
  pipe->add_option("--train", opt.train_path, "training dataset (overrides --data)");
  pipe->add_option("--test", opt.test_path, "test dataset (overrides --data)");
  pipe->add_option("--kb", opt.kb_path, "knowledge base file")->required();
  pipe->add_option("--fraction", opt.fraction, "fraction of training scenes annotated")
      ->capture_default_str();
  pipe->add_option("--tau-frac", opt.tau_frac, "neighborhood radius fraction")
      ->capture_default_str();
  pipe->add_option("--seed", opt.seed, "seed for sampling and training")->capture_default_str();
  pipe->add_option("--iters", opt.iters, "gradient descent iterations")->capture_default_str();
  pipe->add_option("--lr", opt.learning_rate, "learning rate")->capture_default_str();
  pipe->add_option("--l2", opt.l2, "L2 regularization weight")->capture_default_str();
  pipe->add_option("--nms-iou", opt.nms_iou, "NMS IoU threshold")->capture_default_str();
  pipe->add_option("--rel-threshold", opt.rel_threshold, "graph export probability threshold")
      ->capture_default_str();
  pipe->add_option("--score-mode", opt.score_mode, "composed|raw")->capture_default_str();
  pipe->add_option("--ap-points", opt.ap_points, "recall interpolation points")
      ->capture_default_str();
  pipe->add_option("--out-dir", opt.out_dir, "directory for all stage outputs")
      ->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }

  try {
    if (gen->parsed()) run_gen(opt, gen->count("--scenes") > 0, gen->count("--seed") > 0);
    if (annotate->parsed()) run_annotate(opt);
    if (train_cmd->parsed()) run_train(opt);
    if (infer->parsed()) run_infer(opt);
    if (eval_cmd->parsed()) run_eval(opt);
    if (pipe->parsed()) run_pipeline(opt);
  } catch (const IoError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const ValidationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
