#include "latentfill/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <map>
#include <stdexcept>

namespace latentfill::gan {

namespace {

constexpr char kMagic[8] = {'L', 'F', 'C', 'K', 'P', 'T', '0', '1'};

void put_bytes(std::string& buf, const void* p, std::size_t n) {
  buf.append(static_cast<const char*>(p), n);
}

void put_u8(std::string& buf, std::uint8_t v) { buf.push_back(static_cast<char>(v)); }

void put_u16(std::string& buf, std::uint16_t v) {
  for (int i = 0; i < 2; ++i) buf.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

void put_u32(std::string& buf, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) buf.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

void put_u64(std::string& buf, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) buf.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

void put_i32(std::string& buf, std::int32_t v) { put_u32(buf, static_cast<std::uint32_t>(v)); }

void put_f64(std::string& buf, double v) { put_u64(buf, std::bit_cast<std::uint64_t>(v)); }

struct Reader {
  const std::string& buf;
  std::size_t pos = 0;

  void need(std::size_t n) const {
    if (pos + n > buf.size()) throw std::runtime_error("checkpoint truncated");
  }
  std::uint8_t u8() {
    need(1);
    return static_cast<std::uint8_t>(buf[pos++]);
  }
  std::uint16_t u16() {
    need(2);
    std::uint16_t v = 0;
    for (int i = 0; i < 2; ++i) v |= static_cast<std::uint16_t>(static_cast<std::uint8_t>(buf[pos++])) << (8 * i);
    return v;
  }
  std::uint32_t u32() {
    need(4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(static_cast<std::uint8_t>(buf[pos++])) << (8 * i);
    return v;
  }
  std::uint64_t u64() {
    need(8);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(static_cast<std::uint8_t>(buf[pos++])) << (8 * i);
    return v;
  }
  std::int32_t i32() { return static_cast<std::int32_t>(u32()); }
  double f64() { return std::bit_cast<double>(u64()); }
  std::string bytes(std::size_t n) {
    need(n);
    std::string s = buf.substr(pos, n);
    pos += n;
    return s;
  }
};

struct BlockRef {
  std::string name;
  ad::Shape shape;
  const std::vector<double>* data;
};

void append_block(std::string& buf, const BlockRef& b) {
  put_u16(buf, static_cast<std::uint16_t>(b.name.size()));
  put_bytes(buf, b.name.data(), b.name.size());
  put_u8(buf, static_cast<std::uint8_t>(b.shape.size()));
  for (int d : b.shape) put_i32(buf, d);
  for (double v : *b.data) put_f64(buf, v);
}

// Canonical block order: parameters, running averages, Adam accumulators.
std::vector<BlockRef> collect_blocks(const Trainer& t) {
  auto& tr = const_cast<Trainer&>(t);  // named_params is logically const
  std::vector<BlockRef> blocks;
  for (auto& [name, tensor] : tr.G.named_params()) {
    blocks.push_back({name, tensor->shape, &tensor->data});
  }
  for (auto& [name, tensor] : tr.D.named_params()) {
    blocks.push_back({name, tensor->shape, &tensor->data});
  }
  for (auto& [name, vec] : tr.G.named_buffers()) {
    blocks.push_back({name, {static_cast<int>(vec->size())}, vec});
  }
  auto adam_blocks = [&blocks](const std::string& prefix, NamedTensors names,
                               std::vector<ad::AdamState>& states) {
    for (std::size_t i = 0; i < names.size(); ++i) {
      blocks.push_back({"adam." + names[i].first + ".m",
                        {static_cast<int>(states[i].m.size())},
                        &states[i].m});
      blocks.push_back({"adam." + names[i].first + ".v",
                        {static_cast<int>(states[i].v.size())},
                        &states[i].v});
    }
    (void)prefix;
  };
  adam_blocks("G", tr.G.named_params(), tr.opt_g.states());
  adam_blocks("D", tr.D.named_params(), tr.opt_d.states());
  return blocks;
}

}  // namespace

void save_checkpoint(const std::string& path, const Trainer& trainer) {
  std::string buf;
  put_bytes(buf, kMagic, sizeof(kMagic));
  put_u32(buf, kCheckpointVersion);

  const GanConfig& c = trainer.cfg;
  put_i32(buf, c.latent_dim);
  put_i32(buf, c.image_size);
  put_i32(buf, c.channels);
  put_i32(buf, c.base_feature_maps);
  put_f64(buf, c.lr);
  put_f64(buf, c.beta1);
  put_f64(buf, c.beta2);
  put_i32(buf, c.batch_size);
  put_i32(buf, c.epochs);
  put_u64(buf, c.seed);
  put_u8(buf, c.flip_augmentation ? 1 : 0);

  put_i32(buf, trainer.epoch);
  const std::string rng_state = trainer.stream.state();
  put_u32(buf, static_cast<std::uint32_t>(rng_state.size()));
  put_bytes(buf, rng_state.data(), rng_state.size());

  // Adam step counters, one per optimizer (all parameters step together).
  auto& tr = const_cast<Trainer&>(trainer);
  put_u64(buf, tr.opt_g.states().empty() ? 0 : static_cast<std::uint64_t>(tr.opt_g.states()[0].step));
  put_u64(buf, tr.opt_d.states().empty() ? 0 : static_cast<std::uint64_t>(tr.opt_d.states()[0].step));

  const auto blocks = collect_blocks(trainer);
  put_u32(buf, static_cast<std::uint32_t>(blocks.size()));
  for (const auto& b : blocks) append_block(buf, b);

  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error(path + ": cannot write checkpoint");
  out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
  if (!out) throw std::runtime_error(path + ": short write");
}

Trainer load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error(path + ": cannot open checkpoint");
  std::string buf((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  Reader r{buf};

  const std::string magic = r.bytes(sizeof(kMagic));
  if (std::memcmp(magic.data(), kMagic, sizeof(kMagic)) != 0) {
    throw std::runtime_error(path + ": not a checkpoint file (bad magic)");
  }
  const std::uint32_t version = r.u32();
  if (version != kCheckpointVersion) {
    throw std::runtime_error(path + ": unsupported checkpoint version " + std::to_string(version));
  }

  GanConfig c;
  c.latent_dim = r.i32();
  c.image_size = r.i32();
  c.channels = r.i32();
  c.base_feature_maps = r.i32();
  c.lr = r.f64();
  c.beta1 = r.f64();
  c.beta2 = r.f64();
  c.batch_size = r.i32();
  c.epochs = r.i32();
  c.seed = r.u64();
  c.flip_augmentation = r.u8() != 0;

  Trainer t = Trainer::create(c);
  t.epoch = r.i32();
  const std::uint32_t rng_len = r.u32();
  t.stream.restore(r.bytes(rng_len));

  const auto g_step = static_cast<std::int64_t>(r.u64());
  const auto d_step = static_cast<std::int64_t>(r.u64());
  for (auto& s : t.opt_g.states()) s.step = g_step;
  for (auto& s : t.opt_d.states()) s.step = d_step;

  std::map<std::string, std::vector<double>*> targets;
  for (auto& [name, tensor] : t.G.named_params()) targets[name] = &tensor->data;
  for (auto& [name, tensor] : t.D.named_params()) targets[name] = &tensor->data;
  for (auto& [name, vec] : t.G.named_buffers()) targets[name] = vec;
  {
    auto gp = t.G.named_params();
    for (std::size_t i = 0; i < gp.size(); ++i) {
      targets["adam." + gp[i].first + ".m"] = &t.opt_g.states()[i].m;
      targets["adam." + gp[i].first + ".v"] = &t.opt_g.states()[i].v;
    }
    auto dp = t.D.named_params();
    for (std::size_t i = 0; i < dp.size(); ++i) {
      targets["adam." + dp[i].first + ".m"] = &t.opt_d.states()[i].m;
      targets["adam." + dp[i].first + ".v"] = &t.opt_d.states()[i].v;
    }
  }

  const std::uint32_t n_blocks = r.u32();
  for (std::uint32_t i = 0; i < n_blocks; ++i) {
    const std::uint16_t name_len = r.u16();
    const std::string name = r.bytes(name_len);
    const std::uint8_t ndim = r.u8();
    std::size_t count = 1;
    for (int d = 0; d < ndim; ++d) count *= static_cast<std::size_t>(r.i32());
    auto it = targets.find(name);
    if (it == targets.end()) throw std::runtime_error(path + ": unknown block '" + name + "'");
    if (it->second->size() != count) {
      throw std::runtime_error(path + ": block '" + name + "' has " + std::to_string(count) +
                               " values, expected " + std::to_string(it->second->size()));
    }
    for (std::size_t k = 0; k < count; ++k) (*it->second)[k] = r.f64();
  }
  return t;
}

}  // namespace latentfill::gan
