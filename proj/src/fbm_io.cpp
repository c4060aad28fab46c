#include <bit>
#include <cstdio>
#include <cstring>
#include <istream>
#include <ostream>
#include <sstream>

#include "fbmldp/errors.hpp"
#include "fbmldp/fbm.hpp"

namespace fbmldp {

namespace {

static_assert(std::endian::native == std::endian::little, "binary format assumes a little-endian host");

std::string fmt17(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

template <class T>
void put(std::ostream& os, T v) {
  os.write(reinterpret_cast<const char*>(&v), sizeof v);
}

template <class T>
T get(std::istream& is) {
  T v{};
  if (!is.read(reinterpret_cast<char*>(&v), sizeof v)) throw DomainError("increments binary: truncated input");
  return v;
}

}  // namespace

void write_batch_csv(std::ostream& os, const FbmBatch& batch) {
  os << "# fbmldp-batch v1 hurst=" << fmt17(batch.hurst) << " n_steps=" << batch.n_steps << " dim=" << batch.dim
     << " n_paths=" << batch.size() << " seed=" << batch.seed << " sampler=" << to_string(batch.sampler) << "\n";
  os << "t";
  for (std::size_t i = 0; i < batch.size(); ++i) {
    for (std::size_t c = 0; c < batch.dim; ++c) os << ",p" << i << "_c" << c;
  }
  os << "\n";
  for (std::size_t k = 0; k <= batch.n_steps; ++k) {
    os << fmt17(static_cast<double>(k) / static_cast<double>(batch.n_steps));
    for (const auto& p : batch.paths) {
      for (std::size_t c = 0; c < batch.dim; ++c) os << "," << fmt17(p(k, c));
    }
    os << "\n";
  }
}

FbmBatch read_batch_csv(std::istream& is) {
  std::string line;
  if (!std::getline(is, line)) throw DomainError("batch csv: empty input");
  FbmBatch b;
  char sampler[32] = {0};
  unsigned long long n_steps = 0, dim = 0, n_paths = 0, seed = 0;
  if (std::sscanf(line.c_str(), "# fbmldp-batch v1 hurst=%lf n_steps=%llu dim=%llu n_paths=%llu seed=%llu sampler=%31s",
                  &b.hurst, &n_steps, &dim, &n_paths, &seed, sampler) != 6) {
    throw DomainError("batch csv: unrecognized header line");
  }
  b.n_steps = n_steps;
  b.dim = dim;
  b.seed = seed;
  b.sampler = sampler_from_string(sampler);
  if (!std::getline(is, line)) throw DomainError("batch csv: missing column header");
  std::vector<std::vector<double>> vals(n_paths, std::vector<double>((n_steps + 1) * dim));
  for (std::size_t k = 0; k <= n_steps; ++k) {
    if (!std::getline(is, line)) throw DomainError("batch csv: expected " + std::to_string(n_steps + 1) + " rows");
    std::istringstream row(line);
    std::string cell;
    std::getline(row, cell, ',');
    for (std::size_t i = 0; i < n_paths; ++i) {
      for (std::size_t c = 0; c < dim; ++c) {
        if (!std::getline(row, cell, ',')) throw DomainError("batch csv: short row " + std::to_string(k));
        vals[i][k * dim + c] = std::stod(cell);
      }
    }
  }
  for (auto& v : vals) b.paths.emplace_back(n_steps, dim, std::move(v));
  return b;
}

void write_increments_binary(std::ostream& os, const FbmBatch& batch) {
  os.write("FBMI", 4);
  put<std::uint32_t>(os, 1);
  put<std::uint32_t>(os, batch.sampler == Sampler::cholesky ? 0u : 1u);
  put<std::uint64_t>(os, batch.size());
  put<std::uint64_t>(os, batch.n_steps);
  put<std::uint64_t>(os, batch.dim);
  put<double>(os, batch.hurst);
  put<std::uint64_t>(os, batch.seed);
  for (const auto& inc : batch.increments) {
    const auto v = inc.values();
    os.write(reinterpret_cast<const char*>(v.data()), static_cast<std::streamsize>(v.size() * sizeof(double)));
  }
}

FbmBatch read_increments_binary(std::istream& is) {
  char magic[4];
  if (!is.read(magic, 4) || std::memcmp(magic, "FBMI", 4) != 0) throw DomainError("increments binary: bad magic");
  if (get<std::uint32_t>(is) != 1) throw DomainError("increments binary: unsupported version");
  FbmBatch b;
  const auto sampler = get<std::uint32_t>(is);
  if (sampler > 1) throw DomainError("increments binary: unknown sampler code");
  b.sampler = sampler == 0 ? Sampler::cholesky : Sampler::volterra;
  const auto n_paths = get<std::uint64_t>(is);
  b.n_steps = get<std::uint64_t>(is);
  b.dim = get<std::uint64_t>(is);
  b.hurst = get<double>(is);
  b.seed = get<std::uint64_t>(is);
  if (b.n_steps == 0 || b.dim == 0 || b.dim > kMaxFbmDim) throw DomainError("increments binary: bad dimensions");
  std::shared_ptr<const VolterraTable> table;
  std::shared_ptr<const CholeskyFactor> factor;
  if (b.sampler == Sampler::volterra) {
    table = VolterraTable::get(b.n_steps, b.hurst);
  } else {
    factor = CholeskyFactor::get(b.n_steps, b.hurst);
  }
  for (std::uint64_t i = 0; i < n_paths; ++i) {
    std::vector<double> v(b.n_steps * b.dim);
    if (!is.read(reinterpret_cast<char*>(v.data()), static_cast<std::streamsize>(v.size() * sizeof(double)))) {
      throw DomainError("increments binary: truncated payload");
    }
    CellFn inc(b.n_steps, b.dim, std::move(v));
    b.paths.push_back(table ? table->apply(inc) : factor->apply(inc));
    b.increments.push_back(std::move(inc));
  }
  return b;
}

}  // namespace fbmldp
