#include "motsc/nn/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>

#include "motsc/core/error.hpp"

static_assert(std::endian::native == std::endian::little,
              "checkpoint format is little-endian");

namespace motsc::nn {

namespace {

constexpr char kMagic[8] = {'M', 'O', 'T', 'S', 'C', 'N', 'N', '1'};

void put_u32(std::ostream& os, uint32_t v) { os.write(reinterpret_cast<const char*>(&v), 4); }
void put_u64(std::ostream& os, uint64_t v) { os.write(reinterpret_cast<const char*>(&v), 8); }
void put_f64s(std::ostream& os, const double* x, size_t n) {
  os.write(reinterpret_cast<const char*>(x), static_cast<std::streamsize>(n * 8));
}

uint32_t get_u32(std::istream& is) {
  uint32_t v = 0;
  if (!is.read(reinterpret_cast<char*>(&v), 4)) throw config_error("checkpoint: truncated file");
  return v;
}
uint64_t get_u64(std::istream& is) {
  uint64_t v = 0;
  if (!is.read(reinterpret_cast<char*>(&v), 8)) throw config_error("checkpoint: truncated file");
  return v;
}
void get_f64s(std::istream& is, double* x, size_t n) {
  if (!is.read(reinterpret_cast<char*>(x), static_cast<std::streamsize>(n * 8)))
    throw config_error("checkpoint: truncated file");
}

}  // namespace

void save_checkpoint(std::ostream& os, const DenseNet& net, const AdamW* opt) {
  os.write(kMagic, sizeof(kMagic));
  put_u64(os, net.init_seed());
  put_u64(os, opt ? opt->step_count() : 0);
  put_u32(os, static_cast<uint32_t>(net.layers().size()));
  for (const auto& layer : net.layers()) {
    put_u32(os, static_cast<uint32_t>(layer.in));
    put_u32(os, static_cast<uint32_t>(layer.out));
  }
  os.put(opt ? 1 : 0);
  for (const auto& layer : net.layers()) {
    put_f64s(os, layer.w.data.data(), layer.w.data.size());
    put_f64s(os, layer.b.data(), layer.b.size());
  }
  if (opt) {
    const auto& cfg = opt->config();
    const double cfg_vals[5] = {cfg.lr, cfg.beta1, cfg.beta2, cfg.eps, cfg.weight_decay};
    put_f64s(os, cfg_vals, 5);
    for (size_t l = 0; l < net.layers().size(); ++l) {
      put_f64s(os, opt->m_w()[l].data.data(), opt->m_w()[l].data.size());
      put_f64s(os, opt->v_w()[l].data.data(), opt->v_w()[l].data.size());
      put_f64s(os, opt->m_b()[l].data(), opt->m_b()[l].size());
      put_f64s(os, opt->v_b()[l].data(), opt->v_b()[l].size());
    }
  }
  if (!os) throw config_error("checkpoint: write failed");
}

void load_checkpoint(std::istream& is, DenseNet& net, AdamW* opt) {
  char magic[8];
  if (!is.read(magic, 8) || std::memcmp(magic, kMagic, 8) != 0)
    throw config_error("checkpoint: bad magic");
  const uint64_t seed = get_u64(is);
  const uint64_t step = get_u64(is);
  const uint32_t n_layers = get_u32(is);
  if (n_layers != 3) throw config_error("checkpoint: unexpected layer count");
  uint32_t dims[3][2];
  for (auto& d : dims) {
    d[0] = get_u32(is);
    d[1] = get_u32(is);
  }
  if (dims[0][1] != DenseNet::kHidden || dims[1][0] != DenseNet::kHidden ||
      dims[1][1] != DenseNet::kHidden || dims[2][0] != DenseNet::kHidden)
    throw config_error("checkpoint: architecture mismatch");
  const int has_opt = is.get();
  if (has_opt < 0) throw config_error("checkpoint: truncated file");

  net = DenseNet(static_cast<int>(dims[0][0]), static_cast<int>(dims[2][1]));
  net.set_init_seed(seed);
  for (auto& layer : net.mutable_layers()) {
    get_f64s(is, layer.w.data.data(), layer.w.data.size());
    get_f64s(is, layer.b.data(), layer.b.size());
  }
  net.commit_parameter_change();

  if (opt) {
    if (!has_opt) throw config_error("checkpoint: file has no optimizer state");
    double cfg_vals[5];
    get_f64s(is, cfg_vals, 5);
    *opt = AdamW(net, AdamWConfig{cfg_vals[0], cfg_vals[1], cfg_vals[2], cfg_vals[3],
                                  cfg_vals[4]});
    opt->set_step_count(step);
    for (size_t l = 0; l < net.layers().size(); ++l) {
      get_f64s(is, opt->m_w()[l].data.data(), opt->m_w()[l].data.size());
      get_f64s(is, opt->v_w()[l].data.data(), opt->v_w()[l].data.size());
      get_f64s(is, opt->m_b()[l].data(), opt->m_b()[l].size());
      get_f64s(is, opt->v_b()[l].data(), opt->v_b()[l].size());
    }
  }
}

void save_checkpoint_file(const std::string& path, const DenseNet& net, const AdamW* opt) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw config_error("checkpoint: cannot open for writing: " + path);
  save_checkpoint(os, net, opt);
}

void load_checkpoint_file(const std::string& path, DenseNet& net, AdamW* opt) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw config_error("checkpoint: cannot open: " + path);
  load_checkpoint(is, net, opt);
}

}  // namespace motsc::nn
