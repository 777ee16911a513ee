#include "fodkit/connectome.hpp"
#include "fodkit/connmatrix.hpp"
#include "fodkit/enhance.hpp"
#include "fodkit/error.hpp"
#include "fodkit/fixel.hpp"
#include "fodkit/fod_metrics.hpp"
#include "fodkit/gradients.hpp"
#include "fodkit/graph.hpp"
#include "fodkit/sh.hpp"
#include "fodkit/stats.hpp"
#include "fodkit/subsample.hpp"
#include "fodkit/volume.hpp"

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include <chrono>
#include <cstdlib>
#include <functional>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

struct GlobalOpts {
  std::string out_path;
  bool pretty = false;
  bool timestamp = false;
  int threads = 0;
};

void emit(const json& j, const GlobalOpts& g) {
  json out = j;
  if (g.timestamp) {
    auto now = std::chrono::system_clock::now();
    out["timestamp_unix"] = std::chrono::duration_cast<std::chrono::seconds>(
                                now.time_since_epoch())
                                .count();
  }
  std::string text = out.dump(g.pretty ? 2 : -1) + "\n";
  if (g.out_path.empty()) {
    std::cout << text;
  } else {
    std::ofstream f(g.out_path, std::ios::trunc);
    if (!f)
      fodkit::fail("io_error", "cannot open " + g.out_path + " for writing");
    f << text;
  }
}

std::vector<double> read_number_column(const std::string& path) {
  std::ifstream in(path);
  if (!in)
    fodkit::fail("file_not_found", "cannot open " + path);
  std::vector<double> out;
  std::string tok;
  while (in >> tok) {
    std::replace(tok.begin(), tok.end(), ',', ' ');
    std::istringstream ss(tok);
    std::string t2;
    while (ss >> t2) {
      try {
        out.push_back(std::stod(t2));
      } catch (const std::exception&) {
        fodkit::fail("non_numeric", path + ": non-numeric token '" + t2 + "'");
      }
    }
  }
  return out;
}

fodkit::Mask load_mask(const std::string& path) {
  return fodkit::mask_from_volume(fodkit::read_native_volume(path));
}

std::vector<std::string> sorted_files(const std::string& dir) {
  std::vector<std::string> out;
  if (!fs::is_directory(dir))
    fodkit::fail("file_not_found", dir + " is not a directory");
  for (const auto& e : fs::directory_iterator(dir))
    if (e.is_regular_file())
      out.push_back(e.path().string());
  std::sort(out.begin(), out.end());
  return out;
}

json graph_metrics_json(const fodkit::GraphMetrics& gm) {
  return json{{"global_efficiency", gm.global_efficiency},
              {"transitivity", gm.transitivity},
              {"density", gm.density},
              {"assortativity", gm.assortativity},
              {"mean_betweenness", gm.mean_betweenness},
              {"modularity", gm.modularity},
              {"mean_strength", gm.mean_strength},
              {"mean_degree", gm.mean_degree},
              {"mean_clustering", gm.mean_clustering},
              {"mean_local_efficiency", gm.mean_local_efficiency},
              {"disconnected", gm.disconnected}};
}

json load_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in)
    fodkit::fail("file_not_found", "cannot open " + path);
  json j = json::parse(in, nullptr, false);
  if (j.is_discarded())
    fodkit::fail("malformed_json", path + ": not valid JSON");
  return j;
}

std::vector<char> load_sig_vector(const std::string& path) {
  json j = load_json_file(path);
  std::vector<char> out;
  try {
    for (const auto& v : j.at("significant"))
      out.push_back(v.get<bool>() ? 1 : 0);
  } catch (const json::exception& e) {
    fodkit::fail("malformed_json", path + ": " + std::string(e.what()));
  }
  return out;
}

} // namespace

int main(int argc, char** argv) {
  CLI::App app{"fodkit: quantitative evaluation toolkit for FOD enhancement"};
  app.require_subcommand(1);
  app.fallthrough();  // allow global flags like --out after the subcommand
  app.set_config("--config")->description("key=value config file; flags override it");

  GlobalOpts g;
  app.add_option("--out", g.out_path, "write the JSON report here instead of stdout");
  app.add_flag("--pretty", g.pretty, "indent JSON output");
  app.add_flag("--timestamp", g.timestamp, "embed a timestamp in reports");
  if (const char* env = std::getenv("FODKIT_THREADS"))
    g.threads = std::atoi(env);
  app.add_option("--threads", g.threads, "worker thread cap (default: all cores)");

  // ---- convert ----
  auto* convert = app.add_subcommand("convert", "format conversion and inspection");
  convert->require_subcommand(1);

  std::string ni_in, ni_out;
  auto* nifti_import = convert->add_subcommand("nifti-import", "NIfTI-1 to native volume");
  nifti_import->add_option("--in", ni_in, "input .nii or .nii.gz")->required();
  nifti_import->add_option("--out", ni_out, "output .fvf")->required();
  nifti_import->callback([&] {
    fodkit::write_native_volume(fodkit::import_nifti(ni_in), ni_out);
    emit(json{{"written", ni_out}}, g);
  });

  std::string vi_in;
  auto* volume_info = convert->add_subcommand("volume-info", "inspect a native volume");
  volume_info->add_option("--in", vi_in, "input .fvf")->required();
  volume_info->callback([&] {
    auto vol = fodkit::read_native_volume(vi_in);
    emit(json{{"dims", {vol.dims[0], vol.dims[1], vol.dims[2]}},
              {"ncoef", vol.ncoef},
              {"lmax", fodkit::lmax_for_ncoef(vol.ncoef)},
              {"voxel_size", {vol.voxel_size[0], vol.voxel_size[1], vol.voxel_size[2]}},
              {"affine", std::vector<double>(vol.affine.begin(), vol.affine.end())}},
         g);
  });

  // ---- subsample ----
  std::string ss_bvecs, ss_bvals, ss_grad, ss_out_bvecs, ss_out_bvals, ss_out_grad;
  double ss_target_b = 1000;
  int ss_k = 32;
  auto* subsample = app.add_subcommand("subsample", "Kennard-Stone gradient subsampling");
  subsample->add_option("--bvecs", ss_bvecs, "FSL bvecs input");
  subsample->add_option("--bvals", ss_bvals, "FSL bvals input");
  subsample->add_option("--grad", ss_grad, "MRtrix 4-column gradient input");
  subsample->add_option("--target-b", ss_target_b, "shell b-value to subsample")->required();
  subsample->add_option("--k", ss_k, "directions to keep")->required();
  subsample->add_option("--out-bvecs", ss_out_bvecs, "FSL bvecs output");
  subsample->add_option("--out-bvals", ss_out_bvals, "FSL bvals output");
  subsample->add_option("--out-grad", ss_out_grad, "MRtrix gradient output");
  subsample->callback([&] {
    fodkit::GradientTable table;
    if (!ss_grad.empty()) {
      table = fodkit::read_gradients_mrtrix(ss_grad);
    } else if (!ss_bvecs.empty() && !ss_bvals.empty()) {
      table = fodkit::read_gradients_fsl(ss_bvecs, ss_bvals);
    } else {
      fodkit::fail("usage", "provide --grad or both --bvecs and --bvals");
    }
    auto sub = fodkit::subsample_acquisition(table, ss_target_b, ss_k);
    if (!ss_out_grad.empty())
      fodkit::write_gradients_mrtrix(sub, ss_out_grad);
    if (!ss_out_bvecs.empty() && !ss_out_bvals.empty())
      fodkit::write_gradients_fsl(sub, ss_out_bvecs, ss_out_bvals);
    json shells = json::array();
    for (const auto& s : sub.shells)
      shells.push_back({{"bvalue", s.bvalue}, {"size", s.rows.size()}});
    emit(json{{"n_rows", sub.rows.size()}, {"shells", shells}}, g);
  });

  // ---- fod-metrics ----
  std::string fm_gt, fm_est;
  std::vector<std::string> fm_masks;
  bool fm_include_l0 = false;
  auto* fod_metrics = app.add_subcommand("fod-metrics", "PSNR and angular correlation per ROI");
  fod_metrics->add_option("--gt", fm_gt, "ground-truth volume")->required();
  fod_metrics->add_option("--est", fm_est, "estimated volume")->required();
  fod_metrics->add_option("--mask", fm_masks, "name=path mask entries")->required();
  fod_metrics->add_flag("--include-l0", fm_include_l0, "include the l=0 term in r_angular");
  fod_metrics->callback([&] {
    auto gt = fodkit::read_native_volume(fm_gt);
    auto est = fodkit::read_native_volume(fm_est);
    std::map<std::string, fodkit::Mask> masks;
    for (const auto& spec : fm_masks) {
      auto eq = spec.find('=');
      if (eq == std::string::npos)
        fodkit::fail("usage", "--mask expects name=path, got '" + spec + "'");
      masks[spec.substr(0, eq)] = load_mask(spec.substr(eq + 1));
    }
    auto report = fodkit::roi_fod_report(gt, est, masks, fm_include_l0);
    json out;
    for (const auto& [name, entry] : report) {
      if (!entry.ok) {
        out[name] = {{"error", entry.error}};
        continue;
      }
      json e = {{"mean_r_angular", entry.mean_r_angular},
                {"n_voxels", entry.n_voxels},
                {"n_r_voxels", entry.n_r_voxels}};
      if (entry.psnr.infinite)
        e["psnr_db"] = "+inf";
      else
        e["psnr_db"] = entry.psnr.db;
      out[name] = e;
    }
    emit(out, g);
  });

  // ---- fixel ----
  auto* fixel = app.add_subcommand("fixel", "fixel extraction, matching and metrics");
  fixel->require_subcommand(1);

  std::string fx_in, fx_mask, fx_out;
  double fx_peak_threshold = 0.10;
  int fx_subdiv = 4, fx_max = 10;
  auto* fx_extract = fixel->add_subcommand("extract", "segment FODs into fixels");
  fx_extract->add_option("--in", fx_in, "SH volume (.fvf)")->required();
  fx_extract->add_option("--mask", fx_mask, "mask volume (.fvf)")->required();
  fx_extract->add_option("--out", fx_out, "fixel file (.fxf)")->required();
  fx_extract->add_option("--peak-threshold", fx_peak_threshold, "lobe peak rejection threshold");
  fx_extract->add_option("--mesh-subdiv", fx_subdiv, "icosphere subdivision level");
  fx_extract->add_option("--max-fixels", fx_max, "per-voxel fixel cap");
  fx_extract->callback([&] {
    auto vol = fodkit::read_native_volume(fx_in);
    auto mask = load_mask(fx_mask);
    auto mesh = fodkit::make_icosphere(fx_subdiv);
    fodkit::ExtractOptions opts;
    opts.peak_threshold = fx_peak_threshold;
    opts.max_fixels = fx_max;
    opts.threads = g.threads;
    auto fxs = fodkit::extract_fixels(vol, mask, mesh, opts);
    fodkit::write_fixels(fxs, fx_out);
    emit(json{{"n_fixels", fxs.total_fixels()}, {"written", fx_out}}, g);
  });

  std::string fxm_gt, fxm_est;
  double fxm_threshold = 45.0;
  auto* fx_match = fixel->add_subcommand("match", "match fixel sets under the angle threshold");
  fx_match->add_option("--gt", fxm_gt, "ground-truth fixel file")->required();
  fx_match->add_option("--est", fxm_est, "estimated fixel file")->required();
  fx_match->add_option("--threshold-deg", fxm_threshold, "matching angle threshold (degrees)");
  fx_match->callback([&] {
    auto gt = fodkit::read_fixels(fxm_gt);
    auto est = fodkit::read_fixels(fxm_est);
    auto match = fodkit::match_fixels(gt, est, fxm_threshold);
    long matched = 0, missing = 0, extra = 0;
    for (const auto& vm : match.voxels) {
      matched += long(vm.matched.size());
      missing += long(vm.unmatched_gt.size());
      extra += long(vm.unmatched_est.size());
    }
    emit(json{{"n_matched", matched}, {"n_missing", missing}, {"n_extra", extra}}, g);
  });

  std::string fxt_gt, fxt_est, fxt_roi;
  double fxt_threshold = 45.0;
  bool fxt_raw = false;
  auto* fx_metrics = fixel->add_subcommand("metrics", "angular/peak/FD error over an ROI");
  fx_metrics->add_option("--gt", fxt_gt, "ground-truth fixel file")->required();
  fx_metrics->add_option("--est", fxt_est, "estimated fixel file")->required();
  fx_metrics->add_option("--roi", fxt_roi, "ROI mask volume")->required();
  fx_metrics->add_option("--threshold-deg", fxt_threshold, "matching angle threshold (degrees)");
  fx_metrics->add_flag("--raw-sums", fxt_raw, "report unnormalized error sums");
  fx_metrics->callback([&] {
    auto gt = fodkit::read_fixels(fxt_gt);
    auto est = fodkit::read_fixels(fxt_est);
    auto roi = load_mask(fxt_roi);
    auto match = fodkit::match_fixels(gt, est, fxt_threshold);
    auto m = fodkit::fixel_metrics(match, gt, est, roi, !fxt_raw);
    emit(json{{"mean_angular_error_deg", m.mean_angular_error_deg},
              {"peak_error", m.peak_error},
              {"fd_error", m.fd_error},
              {"n_matched", m.n_matched},
              {"n_extra", m.n_extra},
              {"n_missing", m.n_missing},
              {"normalized", !fxt_raw}},
         g);
  });

  std::string fxf_roi, fxf_gt, fxf_out;
  int fxf_expected = 1;
  auto* fx_filter = fixel->add_subcommand("filter-roi", "keep ROI voxels with the expected fixel count");
  fx_filter->add_option("--roi", fxf_roi, "ROI mask volume")->required();
  fx_filter->add_option("--gt-fixels", fxf_gt, "ground-truth fixel file")->required();
  fx_filter->add_option("--expected", fxf_expected, "required fixel count (1-3)")->required();
  fx_filter->add_option("--out", fxf_out, "filtered mask output")->required();
  fx_filter->callback([&] {
    if (fxf_expected < 1 || fxf_expected > 3)
      fodkit::fail("usage", "--expected must be 1, 2 or 3");
    auto roi = load_mask(fxf_roi);
    auto gt = fodkit::read_fixels(fxf_gt);
    auto filtered = fodkit::filter_roi_by_fixel_count(roi, gt, fxf_expected);
    fodkit::write_native_volume(fodkit::volume_from_mask(filtered), fxf_out);
    emit(json{{"n_voxels_in", roi.count()}, {"n_voxels_out", filtered.count()}}, g);
  });

  // ---- connectome ----
  auto* connectome = app.add_subcommand("connectome", "connectome comparison and graph metrics");
  connectome->require_subcommand(1);

  std::string cc_gt_dir, cc_est_dir, cc_edge_csv;
  double cc_alpha = 0.05;
  auto* conn_compare = connectome->add_subcommand("compare", "cohort disparity, tau and edge tests");
  conn_compare->add_option("--gt-dir", cc_gt_dir, "directory of ground-truth CSV matrices")->required();
  conn_compare->add_option("--est-dir", cc_est_dir, "directory of estimated CSV matrices")->required();
  conn_compare->add_option("--alpha", cc_alpha, "FDR level for edge tests");
  conn_compare->add_option("--per-edge-csv", cc_edge_csv, "write per-edge results here");
  conn_compare->callback([&] {
    auto gt_files = sorted_files(cc_gt_dir);
    auto est_files = sorted_files(cc_est_dir);
    if (gt_files.size() != est_files.size() || gt_files.empty())
      fodkit::fail("cohort_mismatch", "cohort directories must contain the same number of files");
    std::vector<fodkit::ConnMatrix> gts, ests;
    for (const auto& f : gt_files)
      gts.push_back(fodkit::read_connmatrix(f));
    for (const auto& f : est_files)
      ests.push_back(fodkit::read_connmatrix(f));

    auto disp = fodkit::disparity(gts, ests);
    double tau_sum = 0;
    for (std::size_t s = 0; s < gts.size(); ++s)
      tau_sum += fodkit::kendall_tau(fodkit::upper_triangle(ests[s]),
                                     fodkit::upper_triangle(gts[s]));
    json out = {{"mu_disparity", disp.mu_disparity},
                {"kendall_tau_mean", tau_sum / double(gts.size())},
                {"n_subjects", gts.size()}};
    if (gts.size() >= 3) {
      auto edge = fodkit::significant_edge_fraction(gts, ests, cc_alpha);
      out["significant_edge_fraction"] = edge.fraction;
      out["n_edges_tested"] = edge.n_tested;
      if (!cc_edge_csv.empty()) {
        std::ofstream f(cc_edge_csv, std::ios::trunc);
        f << "node_i,node_j,p_value,significant\n";
        for (std::size_t e = 0; e < edge.p_values.size(); ++e)
          f << edge.edges[e].first << ',' << edge.edges[e].second << ',' << edge.p_values[e]
            << ',' << int(edge.significant[e]) << "\n";
        out["per_edge_csv_path"] = cc_edge_csv;
      }
    }
    emit(out, g);
  });

  std::string cg_in;
  fodkit::GraphOptions cg_opts;
  auto* conn_graph = connectome->add_subcommand("graph", "graph-theory metrics of one matrix");
  conn_graph->add_option("--in", cg_in, "connectivity CSV")->required();
  conn_graph->add_flag("--normalized-betweenness", cg_opts.normalized_betweenness,
                       "normalize betweenness by (n-1)(n-2)/2");
  conn_graph->add_flag("--weighted-assortativity", cg_opts.weighted_assortativity,
                       "use strength instead of binary degree");
  conn_graph->add_option("--seed", cg_opts.louvain_seed, "base seed for Louvain restarts");
  conn_graph->callback([&] {
    auto m = fodkit::read_connmatrix(cg_in);
    emit(graph_metrics_json(fodkit::graph_metrics(m, cg_opts)), g);
  });

  std::string dr_est, dr_gt;
  auto* conn_dr = connectome->add_subcommand("dr", "difference ratio of metric reports");
  conn_dr->add_option("--est", dr_est, "estimated metrics JSON")->required();
  conn_dr->add_option("--gt", dr_gt, "reference metrics JSON")->required();
  conn_dr->callback([&] {
    json je = load_json_file(dr_est), jg = load_json_file(dr_gt);
    json out;
    for (auto& [key, gv] : jg.items()) {
      if (!gv.is_number() || !je.contains(key) || !je[key].is_number())
        continue;
      double gt_val = gv.get<double>();
      if (gt_val == 0.0) {
        out[key] = {{"error", "zero_reference"}};
        continue;
      }
      double dr = fodkit::difference_ratio(je[key].get<double>(), gt_val);
      char buf[64];
      std::snprintf(buf, sizeof(buf), "%.2f%%", dr);
      out[key] = {{"est", je[key].get<double>()},
                  {"gt", gt_val},
                  {"dr_percent", dr},
                  {"dr_rounded", std::string(buf)}};
    }
    emit(out, g);
  });

  // ---- enhance / fit-linear ----
  std::string en_in, en_mask, en_spec = "identity", en_out;
  auto* enhance_cmd = app.add_subcommand("enhance", "run the patch-wise enhancement pipeline");
  enhance_cmd->add_option("--in", en_in, "input SH volume")->required();
  enhance_cmd->add_option("--mask", en_mask, "mask volume")->required();
  enhance_cmd->add_option("--enhancer", en_spec, "identity | linear:model.json | exec:<command>");
  enhance_cmd->add_option("--out", en_out, "output volume")->required();
  enhance_cmd->callback([&] {
    auto vol = fodkit::read_native_volume(en_in);
    auto mask = load_mask(en_mask);
    fodkit::CoeffStats stats;
    fodkit::Enhancer enhancer;
    if (en_spec == "identity") {
      stats = fodkit::compute_stats(vol, mask);
      enhancer = fodkit::identity_enhancer();
    } else if (en_spec.rfind("linear:", 0) == 0) {
      std::string model = en_spec.substr(7);
      stats = fodkit::read_linear_enhancer_stats(model);
      enhancer = fodkit::read_linear_enhancer(model);
    } else if (en_spec.rfind("exec:", 0) == 0) {
      stats = fodkit::compute_stats(vol, mask);
      enhancer = fodkit::external_process_enhancer(
          en_spec.substr(5), fs::temp_directory_path().string());
    } else {
      fodkit::fail("usage", "unknown enhancer '" + en_spec + "'");
    }
    auto out = fodkit::enhance(vol, mask, stats, enhancer);
    fodkit::write_native_volume(out, en_out);
    emit(json{{"written", en_out}}, g);
  });

  std::string fl_lq, fl_gt, fl_mask, fl_out;
  auto* fit_linear = app.add_subcommand("fit-linear", "fit the closed-form linear enhancer");
  fit_linear->add_option("--lq", fl_lq, "low-quality input volume")->required();
  fit_linear->add_option("--gt", fl_gt, "ground-truth volume")->required();
  fit_linear->add_option("--mask", fl_mask, "mask volume")->required();
  fit_linear->add_option("--out", fl_out, "model JSON output")->required();
  fit_linear->callback([&] {
    auto lq = fodkit::read_native_volume(fl_lq);
    auto gt = fodkit::read_native_volume(fl_gt);
    auto mask = load_mask(fl_mask);
    auto model = fodkit::fit_linear_enhancer(lq, gt, mask);
    fodkit::write_linear_enhancer(model, fodkit::compute_stats(lq, mask), fl_out);
    emit(json{{"written", fl_out}, {"ncoef", lq.ncoef}}, g);
  });

  // ---- fba ----
  auto* fba = app.add_subcommand("fba", "fixel-based analysis statistics");
  fba->require_subcommand(1);

  std::string fb_a, fb_b, fb_mask;
  double fb_alpha = 0.05;
  bool fb_no_fdr = false;
  auto* fba_test = fba->add_subcommand("test", "fixel-wise group comparison of FD");
  fba_test->add_option("--group-a", fb_a, "directory of per-subject FD CSVs")->required();
  fba_test->add_option("--group-b", fb_b, "directory of per-subject FD CSVs")->required();
  fba_test->add_option("--mask", fb_mask, "CSV of 0/1 per fixel index restricting the test");
  fba_test->add_option("--alpha", fb_alpha, "significance level");
  fba_test->add_flag("--no-fdr", fb_no_fdr, "skip BH-FDR correction");
  fba_test->callback([&] {
    std::vector<std::vector<double>> ca, cb;
    for (const auto& f : sorted_files(fb_a))
      ca.push_back(read_number_column(f));
    for (const auto& f : sorted_files(fb_b))
      cb.push_back(read_number_column(f));
    std::vector<char> restrict_mask;
    if (!fb_mask.empty())
      for (double v : read_number_column(fb_mask))
        restrict_mask.push_back(v > 0.5 ? 1 : 0);
    if (!restrict_mask.empty()) {
      auto filter = [&](std::vector<std::vector<double>>& cohort) {
        for (auto& s : cohort) {
          if (s.size() != restrict_mask.size())
            fodkit::fail("length_mismatch", "mask length does not match fixel count");
          std::vector<double> kept;
          for (std::size_t i = 0; i < s.size(); ++i)
            if (restrict_mask[i])
              kept.push_back(s[i]);
          s = std::move(kept);
        }
      };
      filter(ca);
      filter(cb);
    }
    auto res = fodkit::fixelwise_group_test(ca, cb, fb_alpha, !fb_no_fdr);
    json sig = json::array(), pv = json::array();
    long n_sig = 0;
    for (std::size_t i = 0; i < res.p_values.size(); ++i) {
      sig.push_back(bool(res.significant[i]));
      pv.push_back(res.p_values[i]);
      n_sig += res.significant[i];
    }
    emit(json{{"significant", sig}, {"p_values", pv}, {"n_significant", n_sig},
              {"n_fixels", res.p_values.size()}},
         g);
  });

  std::string fs_ref, fs_method;
  auto* fba_score = fba->add_subcommand("score", "confusion metrics against a reference");
  fba_score->add_option("--reference", fs_ref, "reference significance JSON")->required();
  fba_score->add_option("--method", fs_method, "method significance JSON")->required();
  fba_score->callback([&] {
    auto ref = load_sig_vector(fs_ref);
    auto met = load_sig_vector(fs_method);
    auto s = fodkit::confusion_vs_reference(ref, met);
    json out = {{"tp", s.counts.tp}, {"fn", s.counts.fn}, {"fp", s.counts.fp},
                {"tn", s.counts.tn}};
    auto put = [&out](const char* key, const std::optional<double>& v) {
      if (v)
        out[key] = *v;
      else
        out[key] = nullptr;
    };
    put("sensitivity", s.sensitivity);
    put("specificity", s.specificity);
    put("precision", s.precision);
    put("f1", s.f1);
    emit(out, g);
  });

  // ---- stats ----
  auto* stats = app.add_subcommand("stats", "group statistics on CSV columns");
  stats->require_subcommand(1);

  std::string st_a, st_b;
  bool st_student = false;
  auto* st_ttest = stats->add_subcommand("ttest", "independent two-sample t-test");
  st_ttest->add_option("--a", st_a, "group A CSV")->required();
  st_ttest->add_option("--b", st_b, "group B CSV")->required();
  st_ttest->add_flag("--student", st_student, "classic equal-variance test instead of Welch");
  st_ttest->callback([&] {
    auto r = fodkit::independent_ttest(read_number_column(st_a), read_number_column(st_b),
                                       st_student);
    emit(json{{"t", r.t}, {"df", r.df}, {"p", r.p}, {"cohens_d", r.cohens_d}}, g);
  });

  std::string st_groups;
  double st_ssb = -1, st_dfb = -1, st_ssw = -1, st_dfw = -1;
  auto* st_anova = stats->add_subcommand("anova", "one-way ANOVA");
  st_anova->add_option("--groups", st_groups, "comma-separated list of group CSVs");
  st_anova->add_option("--ss-between", st_ssb, "between-group sum of squares");
  st_anova->add_option("--df-between", st_dfb, "between-group degrees of freedom");
  st_anova->add_option("--ss-within", st_ssw, "within-group sum of squares");
  st_anova->add_option("--df-within", st_dfw, "within-group degrees of freedom");
  st_anova->callback([&] {
    fodkit::AnovaResult r;
    if (!st_groups.empty()) {
      std::vector<std::vector<double>> groups;
      std::stringstream ss(st_groups);
      std::string path;
      while (std::getline(ss, path, ','))
        groups.push_back(read_number_column(path));
      r = fodkit::one_way_anova(groups);
    } else if (st_ssb >= 0 && st_dfb > 0 && st_ssw > 0 && st_dfw > 0) {
      r = fodkit::anova_from_ss(st_ssb, st_dfb, st_ssw, st_dfw);
    } else {
      fodkit::fail("usage", "provide --groups or all four --ss/--df values");
    }
    emit(json{{"ss_between", r.ss_between}, {"ss_within", r.ss_within},
              {"df_between", r.df_between}, {"df_within", r.df_within},
              {"F", r.f}, {"p", r.p}},
         g);
  });

  std::string st_x, st_y;
  auto* st_pearson = stats->add_subcommand("pearson", "Pearson correlation");
  st_pearson->add_option("--x", st_x, "x CSV")->required();
  st_pearson->add_option("--y", st_y, "y CSV")->required();
  st_pearson->callback([&] {
    auto r = fodkit::pearson_correlation(read_number_column(st_x), read_number_column(st_y));
    emit(json{{"r", r.r}, {"p", r.p}}, g);
  });

  double st_d = 0, st_power = 0.8, st_alpha = 0.05;
  long st_n = 0;
  auto* st_power_cmd = stats->add_subcommand("power", "sample size / achieved power");
  st_power_cmd->add_option("--d", st_d, "Cohen's d effect size")->required();
  st_power_cmd->add_option("--power", st_power, "target power");
  st_power_cmd->add_option("--alpha", st_alpha, "significance level");
  st_power_cmd->add_option("--n", st_n, "evaluate achieved power at this n instead");
  st_power_cmd->callback([&] {
    if (st_n > 0) {
      emit(json{{"n_per_group", st_n},
                {"power", fodkit::two_sample_power(st_d, st_n, st_alpha)}},
           g);
    } else {
      long n = fodkit::sample_size_for_power(st_d, st_power, st_alpha);
      emit(json{{"n_per_group", n}, {"achieved_power", fodkit::two_sample_power(st_d, n, st_alpha)}},
           g);
    }
  });

  // let global flags like --out / --pretty appear after any subcommand
  std::function<void(CLI::App*)> enable_fallthrough = [&](CLI::App* node) {
    for (CLI::App* sub : node->get_subcommands([](CLI::App*) { return true; })) {
      sub->fallthrough();
      enable_fallthrough(sub);
    }
  };
  enable_fallthrough(&app);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  } catch (const fodkit::Error& e) {
    std::cerr << json{{"code", e.code()}, {"message", e.what()}}.dump() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << json{{"code", "internal_error"}, {"message", e.what()}}.dump() << "\n";
    return 1;
  }
  return 0;
}
