#include "cli.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <atomic>
#include <csignal>
#include <fstream>
#include <iomanip>
#include <thread>

#include "h3d/json_io.hpp"
#include "h3d/metrics.hpp"
#include "h3d/service.hpp"
#include "h3d/workspace.hpp"

namespace h3d {

namespace {

std::atomic<bool> g_interrupted{false};

extern "C" void on_signal(int) { g_interrupted = true; }

struct Options {
  std::string data_dir = "h3d-data";
  std::string backends;

  // site add
  std::string name, type, material, location, illumination, site_id, baseline;
  std::vector<std::string> features, scale_elements;
  // site ingest / show / prompt / job
  std::string site, file, source = "local_file", captured_at;
  double azimuth = 0;
  std::string template_id = "default";
  bool mock = false;
  std::string image_profile = "mock-image", mesh_profile = "mock-mesh";
  bool auto_decimate = false;
  std::string job;
  bool retry = false;
  // report
  std::string fixture, csv_file, format = "markdown", output;
  bool from_jobs = false;
  // serve
  std::string config, host, static_dir;
  int port = -1;
  int workers = 0;
  // mesh
  std::string to = "obj";
  std::size_t target = kTriangleBudgetMax;
};

BaselineHours parse_baseline(const std::string& text) {
  auto comma = text.find(',');
  if (comma == std::string::npos) throw Error(ErrorCode::kInvalidArgument, "--baseline expects LOW,HIGH");
  try {
    return {std::stod(text.substr(0, comma)), std::stod(text.substr(comma + 1))};
  } catch (const std::exception&) {
    throw Error(ErrorCode::kInvalidArgument, "--baseline expects LOW,HIGH");
  }
}

void print_timings(const GenerationJob& job, std::ostream& out) {
  out << std::fixed << std::setprecision(3);
  for (const auto& t : job.timings) {
    out << "  " << std::left << std::setw(13) << stage_name(t.stage) << std::right << std::setw(9) << t.elapsed_s
        << " s" << (t.succeeded ? "" : "  (failed)") << '\n';
  }
  out << "  " << std::left << std::setw(13) << "total" << std::right << std::setw(9) << job.total_elapsed_s()
      << " s\n";
  out.unsetf(std::ios::floatfield);
  out << std::setprecision(6);
}

int finish_job(const GenerationJob& job, std::ostream& out, std::ostream& err) {
  out << "job_id " << job.job_id << '\n' << "stage " << stage_name(job.stage) << '\n';
  print_timings(job, out);
  if (job.stage == Stage::kDone) {
    out << "published " << job.published_dir.value_or("") << '\n';
    return 0;
  }
  err << "error: job failed at " << stage_name(job.failed_stage.value_or(Stage::kFailed)) << ": "
      << job.error.value_or("unknown") << '\n';
  return 1;
}

void write_output(const std::string& path, const std::string& text, std::ostream& out) {
  if (path.empty()) {
    out << text;
  } else {
    write_file_atomic(path, text);
  }
}

int run_serve(const Options& o, std::ostream& out) {
  auto cfg = ServiceConfig::load(o.config);
  if (!o.data_dir.empty() && o.data_dir != "h3d-data") cfg.data_dir = o.data_dir;
  if (!o.backends.empty()) cfg.backends_file = o.backends;
  if (o.port >= 0) cfg.port = o.port;
  if (!o.host.empty()) cfg.host = o.host;
  if (!o.static_dir.empty()) cfg.static_dir = o.static_dir;
  if (o.workers > 0) cfg.workers = o.workers;
  if (o.auto_decimate) cfg.auto_decimate = true;

  SystemClock clock;
  Workspace ws(cfg.data_dir, clock, cfg.backends_file);
  Service service(cfg, ws);
  int port = service.start();
  service.resume_pending_jobs();
  out << "listening on http://" << cfg.host << ':' << port << std::endl;
  g_interrupted = false;
  std::signal(SIGINT, on_signal);
  std::signal(SIGTERM, on_signal);
  while (!g_interrupted) std::this_thread::sleep_for(std::chrono::milliseconds(100));
  out << "stopping; waiting for running stages" << std::endl;
  service.stop();
  return 0;
}

}  // namespace

int cli_run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Heritage 3D reconstruction pipeline", "h3d"};
  app.require_subcommand(1);
  Options o;
  app.add_option("--data-dir", o.data_dir, "Data directory")->envname("H3D_DATA_DIR");
  app.add_option("--backends", o.backends, "Backend profile file")->check(CLI::ExistingFile);

  auto* site = app.add_subcommand("site", "Manage heritage sites")->require_subcommand(1);
  auto* site_add = site->add_subcommand("add", "Register a site");
  site_add->add_option("--name", o.name)->required();
  site_add->add_option("--type", o.type);
  site_add->add_option("--material", o.material);
  site_add->add_option("--feature", o.features, "Decorative feature (repeatable)");
  site_add->add_option("--scale-element", o.scale_elements, "Scale element (repeatable)");
  site_add->add_option("--location", o.location);
  site_add->add_option("--illumination", o.illumination);
  site_add->add_option("--id", o.site_id, "Explicit site id");
  site_add->add_option("--baseline", o.baseline, "Photogrammetry baseline hours LOW,HIGH");

  auto* site_ingest = site->add_subcommand("ingest", "Add a reference image");
  site_ingest->add_option("--site", o.site)->required();
  site_ingest->add_option("--file", o.file)->required()->check(CLI::ExistingFile);
  site_ingest->add_option("--azimuth", o.azimuth, "Viewing azimuth in degrees")->required();
  site_ingest->add_option("--source", o.source)->check(CLI::IsMember({"street_view_url", "local_file", "remote_url"}));
  site_ingest->add_option("--captured-at", o.captured_at);

  auto* site_show = site->add_subcommand("show", "Print a site record");
  site_show->add_option("--site", o.site)->required();
  auto* site_list = site->add_subcommand("list", "List sites");

  auto* prompt = app.add_subcommand("prompt", "Prompt templates")->require_subcommand(1);
  auto* prompt_compile = prompt->add_subcommand("compile", "Compile the prompt for a site");
  prompt_compile->add_option("--site", o.site)->required();
  prompt_compile->add_option("--template", o.template_id);

  auto* job = app.add_subcommand("job", "Generation jobs")->require_subcommand(1);
  auto* job_run = job->add_subcommand("run", "Run a job to completion");
  job_run->add_option("--site", o.site)->required();
  job_run->add_flag("--mock", o.mock, "Use the built-in mock backends");
  job_run->add_option("--template", o.template_id);
  job_run->add_option("--image-profile", o.image_profile);
  job_run->add_option("--mesh-profile", o.mesh_profile);
  job_run->add_flag("--auto-decimate", o.auto_decimate);
  auto* job_status = job->add_subcommand("status", "Print a job");
  job_status->add_option("--job", o.job)->required();
  auto* job_resume = job->add_subcommand("resume", "Continue an interrupted or failed job");
  job_resume->add_option("--job", o.job)->required();
  job_resume->add_flag("--retry", o.retry, "Re-run the failed stage");
  auto* job_list = job->add_subcommand("list", "List jobs");

  auto* report = app.add_subcommand("report", "Timing and speedup report");
  auto* fixture_opt =
      report->add_option("--fixture", o.fixture, "Built-in dataset")->check(CLI::IsMember({"table2"}));
  auto* csv_opt = report->add_option("--csv", o.csv_file, "Metrics CSV file")->check(CLI::ExistingFile);
  auto* jobs_opt = report->add_flag("--jobs", o.from_jobs, "Use finished jobs in the data directory");
  fixture_opt->excludes(csv_opt)->excludes(jobs_opt);
  csv_opt->excludes(jobs_opt);
  report->add_option("--format", o.format)->check(CLI::IsMember({"markdown", "csv"}));
  report->add_option("--output,-o", o.output);

  auto* serve = app.add_subcommand("serve", "Run the HTTP service");
  serve->add_option("--config", o.config)->check(CLI::ExistingFile);
  serve->add_option("--port", o.port);
  serve->add_option("--host", o.host);
  serve->add_option("--static-dir", o.static_dir);
  serve->add_option("--workers", o.workers);
  serve->add_flag("--auto-decimate", o.auto_decimate);

  auto* mesh = app.add_subcommand("mesh", "Mesh utilities")->require_subcommand(1);
  auto* mesh_validate = mesh->add_subcommand("validate", "Validate a glTF or GLB file");
  mesh_validate->add_option("file", o.file)->required()->check(CLI::ExistingFile);
  auto* mesh_convert = mesh->add_subcommand("convert", "Convert a glTF or GLB file");
  mesh_convert->add_option("file", o.file)->required()->check(CLI::ExistingFile);
  mesh_convert->add_option("--to", o.to)->check(CLI::IsMember({"obj", "glb", "gltf"}));
  mesh_convert->add_option("--output,-o", o.output)->required();
  auto* mesh_decimate = mesh->add_subcommand("decimate", "Reduce a mesh to a triangle budget");
  mesh_decimate->add_option("file", o.file)->required()->check(CLI::ExistingFile);
  mesh_decimate->add_option("--target", o.target)->check(CLI::PositiveNumber);
  mesh_decimate->add_option("--output,-o", o.output)->required();

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e, out, err);
    if (code == 0) return 0;
    err << app.help();
    return 2;
  }

  try {
    if (*serve) return run_serve(o, out);

    if (*report) {
      std::vector<MetricsRow> rows;
      if (*fixture_opt) {
        rows = table2_rows();
      } else if (*csv_opt) {
        rows = parse_metrics_csv(to_string(read_file(o.csv_file)));
      } else if (o.from_jobs) {
        SystemClock clock;
        Workspace ws(o.data_dir, clock, o.backends);
        auto jobs = ws.orchestrator().jobs();
        auto sites = ws.catalog().list();
        rows = rows_from_jobs(jobs, sites);
      } else {
        err << "report needs one of --fixture, --csv or --jobs\n";
        return 2;
      }
      auto summary = aggregate(rows);
      auto fmt = o.format == "csv" ? ReportFormat::kCsv : ReportFormat::kMarkdown;
      write_output(o.output, emit_report(rows, summary, fmt), out);
      return 0;
    }

    if (*mesh) {
      auto doc = parse_gltf(read_file(o.file));
      if (*mesh_validate) {
        auto report_json = to_json(validate(doc));
        out << report_json.dump(2) << '\n';
        return report_json["errors"].empty() ? 0 : 1;
      }
      if (*mesh_convert) {
        Bytes bytes = o.to == "obj"   ? export_obj(doc)
                      : o.to == "glb" ? write_gltf(doc, Container::kGlb)
                                      : write_gltf(doc, Container::kJson);
        write_file_atomic(o.output, bytes);
        return 0;
      }
      auto result = decimate_with_stats(doc, o.target);
      write_file_atomic(o.output, write_gltf(result.doc, Container::kGlb));
      out << triangle_count(doc) << " -> " << triangle_count(result.doc) << " triangles\n";
      return 0;
    }

    SystemClock clock;
    Workspace ws(o.data_dir, clock, o.backends);

    if (*site_add) {
      SiteRecord r;
      r.site_id = o.site_id;
      r.name = o.name;
      r.site_type = o.type;
      r.material = o.material;
      r.features = o.features;
      r.scale_elements = o.scale_elements;
      r.location = o.location;
      r.illumination = o.illumination;
      if (!o.baseline.empty()) r.baseline = parse_baseline(o.baseline);
      out << ws.catalog().register_site(std::move(r)) << '\n';
      return 0;
    }
    if (*site_ingest) {
      CaptureMeta meta;
      meta.azimuth_deg = o.azimuth;
      meta.source = *parse_capture_source(o.source);
      if (!o.captured_at.empty()) meta.captured_at = o.captured_at;
      auto image = ws.catalog().ingest_image(o.site, read_file(o.file), meta);
      auto ready = ws.catalog().validate_site_ready(o.site);
      out << image.asset.asset_id << '\n' << "coverage_deg " << ready.coverage_deg << '\n';
      for (const auto& issue : ready.issues) err << "warning: " << issue << '\n';
      return 0;
    }
    if (*site_show) {
      auto j = to_json(ws.catalog().get(o.site));
      j["readiness"] = to_json(ws.catalog().validate_site_ready(o.site));
      out << j.dump(2) << '\n';
      return 0;
    }
    if (*site_list) {
      for (const auto& s : ws.catalog().list()) out << s.site_id << '\t' << s.name << '\n';
      return 0;
    }
    if (*prompt_compile) {
      auto site_rec = ws.catalog().get(o.site);
      auto tmpl = ws.templates().load(o.template_id);
      auto attrs = attributes_of(site_rec);
      for (const auto& issue : lint_attributes(attrs, tmpl)) {
        err << "lint: " << lint_kind_name(issue.kind) << ' ' << issue.field << '\n';
      }
      out << compile_prompt(tmpl, attrs).text << '\n';
      return 0;
    }
    if (*job_run) {
      JobConfig cfg;
      cfg.template_id = o.template_id;
      cfg.image_profile = o.mock ? "mock-image" : o.image_profile;
      cfg.mesh_profile = o.mock ? "mock-mesh" : o.mesh_profile;
      cfg.auto_decimate = o.auto_decimate;
      auto id = ws.orchestrator().submit_job(o.site, cfg);
      return finish_job(ws.orchestrator().run_to_completion(id), out, err);
    }
    if (*job_status) {
      out << to_json(ws.orchestrator().job_status(o.job)).dump(2) << '\n';
      return 0;
    }
    if (*job_resume) {
      return finish_job(ws.orchestrator().run_to_completion(o.job, o.retry), out, err);
    }
    if (*job_list) {
      for (const auto& j : ws.orchestrator().jobs()) {
        out << j.job_id << '\t' << j.site_id << '\t' << stage_name(j.stage) << '\n';
      }
      return 0;
    }
  } catch (const Error& e) {
    err << "error: " << code_name(e.code()) << ": " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    err << "error: internal: " << e.what() << '\n';
    return 1;
  }
  return 2;
}

}  // namespace h3d
