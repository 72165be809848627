// sptomo: phantom simulation, reconstruction, matrix cache and metrics.

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <random>
#include <string>
#include <thread>

#include "sptomo/sptomo.hpp"

namespace fs = std::filesystem;
using namespace sptomo;
using json = nlohmann::json;

namespace {

struct OperatorArgs {
  std::string kernel = "kb";
  int kw = 5;
  std::optional<double> center;
  std::string cache_dir;

  void add(CLI::App* app) {
    app->add_option("--kernel", kernel, "gridding kernel: kb | gauss")
        ->check(CLI::IsMember({"kb", "gauss"}));
    app->add_option("--kw", kw, "kernel width (odd, >= 3)");
    app->add_option("--center", center, "rotation axis column (default n_p/2)");
    const char* env = std::getenv("SPTOMO_CACHE_DIR");
    if (env) cache_dir = env;
    app->add_option("--cache", cache_dir,
                    "matrix cache directory (default $SPTOMO_CACHE_DIR)");
  }

  KernelSpec kernel_spec() const {
    return kernel == "gauss" ? KernelSpec::gaussian(kw)
                             : KernelSpec::kaiser_bessel(kw);
  }

  OperatorOptions options(FilterKind filter, bool calibrate) const {
    OperatorOptions o;
    o.kernel = kernel_spec();
    o.filter = filter;
    o.calibrate = calibrate;
    if (!cache_dir.empty()) o.cache_dir = fs::path(cache_dir);
    return o;
  }
};

ScanGeometry geometry_for(std::size_t n_p, const std::vector<double>& angles,
                          std::size_t n_z, double center) {
  ScanGeometry g;
  g.n_p = n_p;
  g.n_theta = angles.size();
  g.n_z = n_z;
  g.n_x = g.n_y = n_p;
  g.angles = angles;
  g.center = center;
  g.validate();
  return g;
}

void write_json(const fs::path& path, const json& j) {
  std::ofstream os(path);
  if (!os) throw IoError("cannot open " + path.string() + " for writing");
  os << j.dump(2) << "\n";
  if (!os) throw IoError("write failed for " + path.string());
}

json snr_json(double v) { return std::isinf(v) ? json(nullptr) : json(v); }

// ----------------------------------------------------------------- phantom

struct PhantomArgs {
  std::size_t size = 64, slices = 1, angles = 90;
  double noise = 0.0;
  std::uint64_t seed = 0;
  std::string out, truth;
  std::optional<double> intensity;
  OperatorArgs op;
};

int run_phantom(const PhantomArgs& a) {
  const std::string truth = a.truth.empty() ? a.out + ".truth" : a.truth;
  ScanGeometry g = ScanGeometry::make(a.size, a.angles, a.slices, a.op.center);
  const TomoOperators ops =
      TomoOperators::build(g, a.op.options(FilterKind::None, false));
  const auto slices = phantom_shepp_logan(a.size, a.slices);

  Stack3 sino(a.slices, a.angles, a.size);
  VolumeFile tv;
  tv.kind = VolumeKind::Tomogram;
  tv.dims = {a.slices, a.size, a.size};
  tv.center = g.center;
  for (std::size_t z = 0; z < a.slices; ++z) {
    sino.set(z, real_part(ops.radon(to_complex(slices[z]))));
    for (double v : slices[z].values()) tv.payload.push_back(static_cast<float>(v));
  }
  if (a.noise > 0.0) {
    double peak = 0.0;
    for (double v : sino.data) peak = std::max(peak, std::abs(v));
    std::mt19937_64 rng(a.seed);
    std::normal_distribution<double> nd(0.0, a.noise * peak);
    for (double& v : sino.data) v += nd(rng);
  }

  VolumeFile sv;
  sv.kind = VolumeKind::Sinogram;
  sv.dims = {a.slices, a.angles, a.size};
  sv.center = g.center;
  sv.angles = g.angles;
  std::vector<double> values = sino.data;
  if (a.intensity) {
    sv.kind = VolumeKind::Intensity;
    values = simulate_intensity(sino.data, *a.intensity);
  }
  for (double v : values) sv.payload.push_back(static_cast<float>(v));
  write_volume(a.out, sv);
  write_volume(truth, tv);
  std::cout << "wrote " << a.out << " (" << a.slices << "x" << a.angles << "x"
            << a.size << ") and " << truth << "\n";
  return 0;
}

// ------------------------------------------------------------------- recon

struct ReconArgs {
  std::string in, out, algo = "fbp", filter, metrics_out, ref;
  int iters = 10;
  std::size_t workers = std::max(1u, std::thread::hardware_concurrency());
  std::size_t max_per_pass = 8;
  std::optional<double> flat, mu;
  OperatorArgs op;
};

int run_recon(const ReconArgs& a) {
  const VolumeFile in = read_volume(a.in);
  if (in.kind == VolumeKind::Tomogram)
    throw InvalidArgument(a.in + " holds a tomogram, expected a sinogram");
  const auto n_z = in.dims[0], n_theta = in.dims[1], n_p = in.dims[2];
  if (in.angles.size() != n_theta)
    throw IoError(a.in + ": angle list does not match dims");
  const ScanGeometry g =
      geometry_for(n_p, in.angles, n_z, a.op.center.value_or(in.center));

  SinogramStack stack{g, Stack3(n_z, n_theta, n_p)};
  std::vector<double> raw(in.payload.begin(), in.payload.end());
  if (in.kind == VolumeKind::Intensity) {
    if (!a.flat)
      throw InvalidFlatField(a.in + " holds raw intensities; pass --flat I0");
    raw = normalize(raw, *a.flat);
  }
  stack.data.data = std::move(raw);

  SolverConfig cfg;
  cfg.algorithm = algorithm_from_string(a.algo);
  cfg.max_iter = a.iters;
  cfg.mu = a.mu;
  FilterKind op_filter = FilterKind::None;
  if (cfg.algorithm == Algorithm::FBP) {
    op_filter = a.filter.empty() ? FilterKind::RamLak : filter_from_string(a.filter);
  } else {
    cfg.filter = a.filter.empty() ? FilterKind::Hamming : filter_from_string(a.filter);
  }
  const TomoOperators ops = TomoOperators::build(
      g, a.op.options(op_filter, cfg.algorithm == Algorithm::FBP));
  if (!ops.density_converged)
    std::cerr << "warning: density filter solve did not converge; using best iterate\n";

  const PipelineResult res =
      run_pipeline(stack, ops, cfg, a.workers, a.max_per_pass);

  VolumeFile out;
  out.kind = VolumeKind::Tomogram;
  out.dims = {n_z, g.n_y, g.n_x};
  out.center = g.center;
  out.payload.reserve(res.tomograms.data.size());
  for (double v : res.tomograms.data) out.payload.push_back(static_cast<float>(v));
  write_volume(a.out, out);

  json rec = {{"algo", to_string(cfg.algorithm)},
              {"iters", res.report.iterations_run},
              {"snr_db", nullptr},
              {"residual_history", res.report.residual_history},
              {"wall_time", res.report.wall_time},
              {"converged", res.report.converged},
              {"workers", a.workers},
              {"slices", n_z},
              {"cache_hits", ops.cache_hits}};
  if (!a.ref.empty()) {
    const VolumeFile ref = read_volume(a.ref);
    if (ref.dims != out.dims)
      throw ShapeMismatch("reference " + a.ref + " has different dims");
    std::vector<double> r(ref.payload.begin(), ref.payload.end());
    const double s = snr(res.tomograms.data, r);
    rec["snr_db"] = snr_json(s);
    rec["exact"] = std::isinf(s);
    std::cout << "snr_db " << s << "\n";
  }
  if (!a.metrics_out.empty()) write_json(a.metrics_out, json{{"runs", json::array({rec})}});
  std::cout << "wrote " << a.out << " (" << n_z << "x" << g.n_y << "x" << g.n_x
            << ") in " << res.report.wall_time << " s\n";
  return 0;
}

// ------------------------------------------------------------------- cache

struct CacheArgs {
  bool build = false, inspect = false;
  std::size_t size = 64, angles = 90;
  std::string filter = "ramlak";
  OperatorArgs op;
};

int run_cache(const CacheArgs& a) {
  if (a.build == a.inspect)
    throw InvalidArgument("pass exactly one of --build or --inspect");
  if (a.op.cache_dir.empty())
    throw InvalidArgument("no cache directory: pass --cache or set SPTOMO_CACHE_DIR");
  const ScanGeometry g = ScanGeometry::make(a.size, a.angles, 1, a.op.center);
  const auto kind = filter_from_string(a.filter);
  const auto key = make_cache_key(g, a.op.kernel_spec(), FilterKind::None, "");
  if (a.build) {
    const TomoOperators ops = TomoOperators::build(g, a.op.options(kind, true));
    std::cout << "unfiltered " << key.digest << " nnz " << ops.csr.nnz()
              << (ops.cache_hits ? " (already cached)" : " (built)") << "\n";
    return 0;
  }
  const auto path = cache_path(key, a.op.cache_dir);
  const auto m = cache_load(key, a.op.cache_dir);
  if (!m) {
    std::cout << "miss " << path.string() << "\n";
    return 2;
  }
  std::cout << "hit " << path.string() << "\n"
            << "rows " << m->n_rows() << " cols " << m->n_cols() << " nnz "
            << m->nnz() << " sparsity "
            << static_cast<double>(m->nnz()) /
                   (static_cast<double>(m->n_rows()) * m->n_cols())
            << "\n";
  return 0;
}

// ----------------------------------------------------------------- metrics

int run_metrics(const std::string& rec_path, const std::string& ref_path) {
  const VolumeFile rec = read_volume(rec_path), ref = read_volume(ref_path);
  if (rec.dims != ref.dims)
    throw ShapeMismatch(rec_path + " and " + ref_path + " differ in dims");
  std::vector<double> a(rec.payload.begin(), rec.payload.end());
  std::vector<double> b(ref.payload.begin(), ref.payload.end());
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    num += (a[i] - b[i]) * (a[i] - b[i]);
    den += b[i] * b[i];
  }
  const double s = snr(a, b);
  json out = {{"snr_db", snr_json(s)},
              {"exact", std::isinf(s)},
              {"residual", den > 0 ? std::sqrt(num / den) : std::sqrt(num)}};
  const std::size_t per = rec.dims[1] * rec.dims[2];
  json slices = json::array();
  for (std::size_t z = 0; z < rec.dims[0]; ++z)
    slices.push_back(snr_json(snr(std::span<const double>(a).subspan(z * per, per),
                                  std::span<const double>(b).subspan(z * per, per))));
  out["slice_snr_db"] = slices;
  std::cout << out.dump() << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Sparse-matrix Fourier tomography toolkit"};
  app.require_subcommand(1);

  PhantomArgs ph;
  auto* p = app.add_subcommand("phantom", "simulate a Shepp-Logan sinogram stack");
  p->add_option("--size", ph.size, "image and detector size")->check(CLI::Range(8, 4096));
  p->add_option("--slices", ph.slices, "number of slices")->check(CLI::PositiveNumber);
  p->add_option("--angles", ph.angles, "projection angles over [0, pi)")->check(CLI::PositiveNumber);
  p->add_option("--noise", ph.noise, "Gaussian sigma relative to the sinogram max");
  p->add_option("--seed", ph.seed, "noise seed");
  p->add_option("--out", ph.out, "sinogram output")->required();
  p->add_option("--truth", ph.truth, "ground-truth tomogram output (default OUT.truth)");
  p->add_option("--intensity", ph.intensity, "write raw intensities I0*exp(-sino)");
  ph.op.add(p);

  ReconArgs rc;
  auto* r = app.add_subcommand("recon", "reconstruct a sinogram stack");
  r->add_option("--in", rc.in, "sinogram or intensity volume")->required();
  r->add_option("--out", rc.out, "tomogram output")->required();
  r->add_option("--algo", rc.algo, "fbp | sirt | cgls | tv")
      ->check(CLI::IsMember({"fbp", "sirt", "cgls", "tv"}));
  r->add_option("--iters", rc.iters, "iterations")->check(CLI::PositiveNumber);
  r->add_option("--filter", rc.filter,
                "FBP filter (default ramlak) or iterative preconditioner (default hamming)")
      ->check(CLI::IsMember({"ramlak", "shepplogan", "hamming", "density", "none"}));
  r->add_option("--workers", rc.workers, "worker threads")->check(CLI::PositiveNumber);
  r->add_option("--max-per-pass", rc.max_per_pass, "slices per worker per pass")
      ->check(CLI::PositiveNumber);
  r->add_option("--mu", rc.mu, "TV data weight");
  r->add_option("--flat", rc.flat, "flat-field I0 for raw intensity input");
  r->add_option("--metrics-out", rc.metrics_out, "JSON report");
  r->add_option("--ref", rc.ref, "ground truth for SNR");
  rc.op.add(r);

  CacheArgs ca;
  auto* c = app.add_subcommand("cache", "build or inspect the matrix cache");
  c->add_flag("--build", ca.build, "build and store matrices");
  c->add_flag("--inspect", ca.inspect, "report the cached unfiltered matrix");
  c->add_option("--size", ca.size, "detector size")->check(CLI::Range(8, 4096));
  c->add_option("--angles", ca.angles, "projection angles")->check(CLI::PositiveNumber);
  c->add_option("--filter", ca.filter, "filter for the iRadon matrix")
      ->check(CLI::IsMember({"ramlak", "shepplogan", "hamming", "density", "none"}));
  ca.op.add(c);

  std::string m_rec, m_ref;
  auto* m = app.add_subcommand("metrics", "SNR of a reconstruction");
  m->add_option("--rec", m_rec, "reconstruction")->required();
  m->add_option("--ref", m_ref, "reference")->required();

  CLI11_PARSE(app, argc, argv);
  try {
    if (p->parsed()) return run_phantom(ph);
    if (r->parsed()) return run_recon(rc);
    if (c->parsed()) return run_cache(ca);
    if (m->parsed()) return run_metrics(m_rec, m_ref);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 1;
}
