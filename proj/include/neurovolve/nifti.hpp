#ifndef NEUROVOLVE_NIFTI_HPP
#define NEUROVOLVE_NIFTI_HPP

#include <zlib.h>

#include <algorithm>
#include <array>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "neurovolve/volume.hpp"

namespace neurovolve::nifti {

// NIfTI-1 datatype codes.
inline constexpr std::int16_t kDtUint8 = 2;
inline constexpr std::int16_t kDtInt16 = 4;
inline constexpr std::int16_t kDtFloat32 = 16;
inline constexpr std::int16_t kDtFloat64 = 64;
inline constexpr std::int16_t kDtUint16 = 512;

/// The 348-byte NIfTI-1 header. Field offsets follow the published layout
/// exactly; natural alignment already yields the right packing, which the
/// static_assert below pins down.
struct Nifti1Header {
  std::int32_t sizeof_hdr;     // must be 348
  char data_type[10];
  char db_name[18];
  std::int32_t extents;
  std::int16_t session_error;
  char regular;
  char dim_info;
  std::int16_t dim[8];
  float intent_p1;
  float intent_p2;
  float intent_p3;
  std::int16_t intent_code;
  std::int16_t datatype;
  std::int16_t bitpix;
  std::int16_t slice_start;
  float pixdim[8];
  float vox_offset;
  float scl_slope;
  float scl_inter;
  std::int16_t slice_end;
  char slice_code;
  char xyzt_units;
  float cal_max;
  float cal_min;
  float slice_duration;
  float toffset;
  std::int32_t glmax;
  std::int32_t glmin;
  char descrip[80];
  char aux_file[24];
  std::int16_t qform_code;
  std::int16_t sform_code;
  float quatern_b;
  float quatern_c;
  float quatern_d;
  float qoffset_x;
  float qoffset_y;
  float qoffset_z;
  float srow_x[4];
  float srow_y[4];
  float srow_z[4];
  char intent_name[16];
  char magic[4];
};
static_assert(sizeof(Nifti1Header) == 348, "NIfTI-1 header must be 348 bytes");

inline void swap_bytes(void* p, std::size_t size) {
  auto* b = static_cast<unsigned char*>(p);
  for (std::size_t i = 0; i < size / 2; ++i)
    std::swap(b[i], b[size - 1 - i]);
}

template <typename T>
void swap_value(T& v) {
  swap_bytes(&v, sizeof(T));
}

inline void swap_header(Nifti1Header& h) {
  swap_value(h.sizeof_hdr);
  swap_value(h.extents);
  swap_value(h.session_error);
  for (auto& d : h.dim) swap_value(d);
  swap_value(h.intent_p1);
  swap_value(h.intent_p2);
  swap_value(h.intent_p3);
  swap_value(h.intent_code);
  swap_value(h.datatype);
  swap_value(h.bitpix);
  swap_value(h.slice_start);
  for (auto& p : h.pixdim) swap_value(p);
  swap_value(h.vox_offset);
  swap_value(h.scl_slope);
  swap_value(h.scl_inter);
  swap_value(h.slice_end);
  swap_value(h.cal_max);
  swap_value(h.cal_min);
  swap_value(h.slice_duration);
  swap_value(h.toffset);
  swap_value(h.glmax);
  swap_value(h.glmin);
  swap_value(h.qform_code);
  swap_value(h.sform_code);
  swap_value(h.quatern_b);
  swap_value(h.quatern_c);
  swap_value(h.quatern_d);
  swap_value(h.qoffset_x);
  swap_value(h.qoffset_y);
  swap_value(h.qoffset_z);
  for (auto& v : h.srow_x) swap_value(v);
  for (auto& v : h.srow_y) swap_value(v);
  for (auto& v : h.srow_z) swap_value(v);
}

/// Whole-file read through zlib; handles both gzip and plain payloads.
inline std::vector<unsigned char> read_file_bytes(const std::string& path) {
  if (!std::filesystem::exists(path))
    throw std::runtime_error("NIfTI file not found: " + path);
  gzFile f = gzopen(path.c_str(), "rb");
  if (!f) throw std::runtime_error("cannot open NIfTI file: " + path);
  gzbuffer(f, 1 << 17);
  std::vector<unsigned char> bytes;
  unsigned char buf[1 << 16];
  int n;
  while ((n = gzread(f, buf, sizeof(buf))) > 0)
    bytes.insert(bytes.end(), buf, buf + n);
  const bool read_error = (n < 0);
  gzclose(f);
  if (read_error)
    throw std::runtime_error("error while reading NIfTI file: " + path);
  return bytes;
}

inline Mat4 affine_from_quaternion(const Nifti1Header& h) {
  const double b = h.quatern_b, c = h.quatern_c, d = h.quatern_d;
  double a2 = 1.0 - (b * b + c * c + d * d);
  const double a = a2 > 0.0 ? std::sqrt(a2) : 0.0;
  const double qfac = (h.pixdim[0] < 0.0f) ? -1.0 : 1.0;
  const double dx = h.pixdim[1], dy = h.pixdim[2], dz = h.pixdim[3] * qfac;
  Mat4 m = Mat4::identity();
  m.m[0] = (a * a + b * b - c * c - d * d) * dx;
  m.m[1] = (2 * b * c - 2 * a * d) * dy;
  m.m[2] = (2 * b * d + 2 * a * c) * dz;
  m.m[4] = (2 * b * c + 2 * a * d) * dx;
  m.m[5] = (a * a + c * c - b * b - d * d) * dy;
  m.m[6] = (2 * c * d - 2 * a * b) * dz;
  m.m[8] = (2 * b * d - 2 * a * c) * dx;
  m.m[9] = (2 * c * d + 2 * a * b) * dy;
  m.m[10] = (a * a + d * d - c * c - b * b) * dz;
  m.m[3] = h.qoffset_x;
  m.m[7] = h.qoffset_y;
  m.m[11] = h.qoffset_z;
  return m;
}

template <typename T>
void decode_voxels(const unsigned char* src, std::size_t n, bool swap,
                   std::vector<float>& out) {
  out.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    T v;
    std::memcpy(&v, src + i * sizeof(T), sizeof(T));
    if (swap) swap_value(v);
    out[i] = static_cast<float>(v);
  }
}

struct ParsedNifti {
  Nifti1Header header;
  bool swapped = false;
  std::vector<unsigned char> bytes;  // whole decompressed file
};

inline ParsedNifti parse_header(const std::string& path) {
  ParsedNifti p;
  p.bytes = read_file_bytes(path);
  if (p.bytes.size() < sizeof(Nifti1Header))
    throw std::runtime_error(path + ": truncated NIfTI header (" +
                             std::to_string(p.bytes.size()) + " bytes)");
  std::memcpy(&p.header, p.bytes.data(), sizeof(Nifti1Header));
  if (p.header.sizeof_hdr != 348) {
    auto test = p.header.sizeof_hdr;
    swap_value(test);
    if (test != 348)
      throw std::runtime_error(path +
                               ": malformed NIfTI header (sizeof_hdr != 348; "
                               "not a NIfTI-1 file)");
    swap_header(p.header);
    p.swapped = true;
  }
  const char* magic = p.header.magic;
  if (std::memcmp(magic, "n+1", 4) != 0) {
    if (std::memcmp(magic, "ni1", 4) == 0)
      throw std::runtime_error(
          path + ": unsupported NIfTI variant (header/data pair \"ni1\"); "
                 "only single-file \"n+1\" is supported");
    throw std::runtime_error(path +
                             ": malformed NIfTI header (magic is not "
                             "\"n+1\")");
  }
  return p;
}

/// Reads a NIfTI-1 single-file volume (.nii or .nii.gz).
/// Values are returned exactly as stored (scl_slope/scl_inter are not
/// applied); the affine comes from sform when sform_code > 0, else qform,
/// else diagonal(spacing).
inline Volume3D read_nifti(const std::string& path,
                           VolumeKind kind = VolumeKind::Intensity) {
  ParsedNifti p = parse_header(path);
  const Nifti1Header& h = p.header;

  if (h.dim[0] != 3)
    throw std::runtime_error(path + ": expected 3 spatial dimensions, got " +
                             std::to_string(h.dim[0]));
  if (h.dim[1] <= 0 || h.dim[2] <= 0 || h.dim[3] <= 0)
    throw std::runtime_error(path + ": non-positive dimension in header");

  Volume3D vol;
  vol.dims = {h.dim[1], h.dim[2], h.dim[3]};
  for (int i = 0; i < 3; ++i) {
    const double s = h.pixdim[i + 1];
    if (!(s > 0.0))
      throw std::runtime_error(path + ": non-positive pixdim[" +
                               std::to_string(i + 1) + "]");
    vol.spacing[i] = s;
  }
  vol.kind = kind;

  if (h.sform_code > 0) {
    Mat4 m = Mat4::identity();
    for (int c = 0; c < 4; ++c) {
      m.m[0 + c] = h.srow_x[c];
      m.m[4 + c] = h.srow_y[c];
      m.m[8 + c] = h.srow_z[c];
    }
    vol.affine = m;
  } else if (h.qform_code > 0) {
    vol.affine = affine_from_quaternion(h);
  } else {
    vol.affine = Mat4::diagonal(vol.spacing[0], vol.spacing[1],
                                vol.spacing[2]);
  }

  const std::size_t n = vol.voxel_count();
  std::size_t elem = 0;
  switch (h.datatype) {
    case kDtUint8: elem = 1; break;
    case kDtInt16: elem = 2; break;
    case kDtUint16: elem = 2; break;
    case kDtFloat32: elem = 4; break;
    case kDtFloat64: elem = 8; break;
    default:
      throw std::runtime_error(path + ": unsupported NIfTI datatype " +
                               std::to_string(h.datatype));
  }

  const auto offset = static_cast<std::size_t>(h.vox_offset);
  if (h.vox_offset < 348.0f)
    throw std::runtime_error(path + ": invalid vox_offset " +
                             std::to_string(h.vox_offset));
  if (p.bytes.size() < offset + n * elem)
    throw std::runtime_error(path + ": truncated voxel payload (need " +
                             std::to_string(offset + n * elem) + " bytes, " +
                             "have " + std::to_string(p.bytes.size()) + ")");

  const unsigned char* src = p.bytes.data() + offset;
  switch (h.datatype) {
    case kDtUint8: decode_voxels<std::uint8_t>(src, n, false, vol.data); break;
    case kDtInt16: decode_voxels<std::int16_t>(src, n, p.swapped, vol.data); break;
    case kDtUint16: decode_voxels<std::uint16_t>(src, n, p.swapped, vol.data); break;
    case kDtFloat32: decode_voxels<float>(src, n, p.swapped, vol.data); break;
    case kDtFloat64: decode_voxels<double>(src, n, p.swapped, vol.data); break;
    default: break;
  }

  if (kind == VolumeKind::Label) {
    for (float f : vol.data) {
      if (f < 0.0f || f != std::floor(f))
        throw std::runtime_error(path +
                                 ": label volume contains non-integer or "
                                 "negative value " + std::to_string(f));
    }
  }
  return vol;
}

/// Reads a 4D channel-last NIfTI file as one Volume3D per channel.
/// Used for probability volumes; all channels share one grid.
inline std::vector<Volume3D> read_nifti_4d(const std::string& path) {
  ParsedNifti p = parse_header(path);
  const Nifti1Header& h = p.header;
  if (h.dim[0] != 4)
    throw std::runtime_error(path + ": expected a 4D volume, got dim[0]=" +
                             std::to_string(h.dim[0]));
  const int nc = h.dim[4];
  if (nc <= 0) throw std::runtime_error(path + ": non-positive channel count");

  // Reuse the 3D reader by faking a 3D header per channel.
  Volume3D proto;
  proto.dims = {h.dim[1], h.dim[2], h.dim[3]};
  for (int i = 0; i < 3; ++i) {
    const double s = h.pixdim[i + 1];
    if (!(s > 0.0))
      throw std::runtime_error(path + ": non-positive pixdim");
    proto.spacing[i] = s;
  }
  if (h.sform_code > 0) {
    Mat4 m = Mat4::identity();
    for (int c = 0; c < 4; ++c) {
      m.m[0 + c] = h.srow_x[c];
      m.m[4 + c] = h.srow_y[c];
      m.m[8 + c] = h.srow_z[c];
    }
    proto.affine = m;
  } else if (h.qform_code > 0) {
    proto.affine = affine_from_quaternion(h);
  } else {
    proto.affine = Mat4::diagonal(proto.spacing[0], proto.spacing[1],
                                  proto.spacing[2]);
  }

  const std::size_t n = proto.voxel_count();
  std::size_t elem = 0;
  switch (h.datatype) {
    case kDtUint8: elem = 1; break;
    case kDtInt16: elem = 2; break;
    case kDtUint16: elem = 2; break;
    case kDtFloat32: elem = 4; break;
    case kDtFloat64: elem = 8; break;
    default:
      throw std::runtime_error(path + ": unsupported NIfTI datatype " +
                               std::to_string(h.datatype));
  }
  const auto offset = static_cast<std::size_t>(h.vox_offset);
  if (p.bytes.size() < offset + n * elem * nc)
    throw std::runtime_error(path + ": truncated voxel payload");

  std::vector<Volume3D> channels;
  channels.reserve(nc);
  for (int c = 0; c < nc; ++c) {
    Volume3D vol = proto;
    const unsigned char* src = p.bytes.data() + offset + c * n * elem;
    switch (h.datatype) {
      case kDtUint8: decode_voxels<std::uint8_t>(src, n, false, vol.data); break;
      case kDtInt16: decode_voxels<std::int16_t>(src, n, p.swapped, vol.data); break;
      case kDtUint16: decode_voxels<std::uint16_t>(src, n, p.swapped, vol.data); break;
      case kDtFloat32: decode_voxels<float>(src, n, p.swapped, vol.data); break;
      case kDtFloat64: decode_voxels<double>(src, n, p.swapped, vol.data); break;
      default: break;
    }
    channels.push_back(std::move(vol));
  }
  return channels;
}

inline Nifti1Header make_header(const Volume3D& vol, int nchannels) {
  Nifti1Header h{};
  h.sizeof_hdr = 348;
  h.regular = 'r';
  h.dim[0] = static_cast<std::int16_t>(nchannels > 1 ? 4 : 3);
  h.dim[1] = static_cast<std::int16_t>(vol.dims[0]);
  h.dim[2] = static_cast<std::int16_t>(vol.dims[1]);
  h.dim[3] = static_cast<std::int16_t>(vol.dims[2]);
  h.dim[4] = static_cast<std::int16_t>(nchannels > 1 ? nchannels : 1);
  for (int i = 5; i < 8; ++i) h.dim[i] = 1;
  h.pixdim[0] = 1.0f;
  for (int i = 0; i < 3; ++i)
    h.pixdim[i + 1] = static_cast<float>(vol.spacing[i]);
  h.pixdim[4] = h.pixdim[5] = h.pixdim[6] = h.pixdim[7] = 1.0f;
  h.vox_offset = 352.0f;
  h.scl_slope = 1.0f;
  h.scl_inter = 0.0f;
  h.xyzt_units = 2;  // NIFTI_UNITS_MM
  h.qform_code = 0;
  h.sform_code = 1;
  for (int c = 0; c < 4; ++c) {
    h.srow_x[c] = static_cast<float>(vol.affine.m[0 + c]);
    h.srow_y[c] = static_cast<float>(vol.affine.m[4 + c]);
    h.srow_z[c] = static_cast<float>(vol.affine.m[8 + c]);
  }
  std::memcpy(h.magic, "n+1", 4);
  if (vol.kind == VolumeKind::Label) {
    h.datatype = kDtUint8;
    h.bitpix = 8;
  } else {
    h.datatype = kDtFloat32;
    h.bitpix = 32;
  }
  return h;
}

inline void write_bytes(const std::string& path,
                        const std::vector<unsigned char>& bytes, bool gz,
                        int gzip_level) {
  // Write to a temp file then rename, so concurrent readers never see a
  // partial volume.
  const std::string tmp = path + ".tmp";
  if (gz) {
    const std::string mode = "wb" + std::to_string(gzip_level);
    gzFile f = gzopen(tmp.c_str(), mode.c_str());
    if (!f) throw std::runtime_error("cannot open for writing: " + tmp);
    gzbuffer(f, 1 << 17);
    std::size_t off = 0;
    while (off < bytes.size()) {
      const unsigned chunk = static_cast<unsigned>(
          std::min<std::size_t>(bytes.size() - off, 1u << 24));
      if (gzwrite(f, bytes.data() + off, chunk) != static_cast<int>(chunk)) {
        gzclose(f);
        throw std::runtime_error("gzip write failure: " + tmp);
      }
      off += chunk;
    }
    if (gzclose(f) != Z_OK)
      throw std::runtime_error("gzip close failure: " + tmp);
  } else {
    std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
    if (!f) throw std::runtime_error("cannot open for writing: " + tmp);
    f.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
    if (!f) throw std::runtime_error("write failure: " + tmp);
    f.close();
  }
  std::filesystem::rename(tmp, path);
}

inline constexpr int kDefaultGzipLevel = 4;

/// Writes a NIfTI-1 single-file volume. Label volumes are stored as uint8,
/// Intensity as float32; sform carries the affine (sform_code = 1); the
/// output is gzip-compressed iff the path ends in ".gz".
inline void write_nifti(const Volume3D& vol, const std::string& path,
                        int gzip_level = kDefaultGzipLevel) {
  vol.validate();
  const Nifti1Header h = make_header(vol, 1);
  const std::size_t n = vol.voxel_count();

  std::vector<unsigned char> bytes(352, 0);
  std::memcpy(bytes.data(), &h, sizeof(h));
  // bytes 348..351 stay zero: no header extensions.

  if (vol.kind == VolumeKind::Label) {
    bytes.reserve(352 + n);
    for (std::size_t i = 0; i < n; ++i) {
      const int lab = label_at(vol, i);
      if (lab < 0 || lab > 255)
        throw std::runtime_error(path + ": label value " +
                                 std::to_string(lab) +
                                 " exceeds uint8 range");
      bytes.push_back(static_cast<unsigned char>(lab));
    }
  } else {
    bytes.resize(352 + n * 4);
    std::memcpy(bytes.data() + 352, vol.data.data(), n * 4);
  }

  const bool gz = path.size() > 3 && path.ends_with(".gz");
  write_bytes(path, bytes, gz, gzip_level);
}

/// Writes a 4D channel-last NIfTI file (one 3D block per channel).
/// All channels must share the prototype grid; stored as float32.
inline void write_nifti_4d(const std::vector<Volume3D>& channels,
                           const std::string& path,
                           int gzip_level = kDefaultGzipLevel) {
  if (channels.empty())
    throw std::invalid_argument("write_nifti_4d: no channels");
  const Volume3D& proto = channels.front();
  for (const auto& c : channels)
    if (!same_geometry(proto, c))
      throw std::invalid_argument("write_nifti_4d: channel grids differ");

  Volume3D tmp = proto;
  tmp.kind = VolumeKind::Intensity;
  Nifti1Header h = make_header(tmp, static_cast<int>(channels.size()));
  const std::size_t n = proto.voxel_count();

  std::vector<unsigned char> bytes(352, 0);
  std::memcpy(bytes.data(), &h, sizeof(h));
  bytes.resize(352 + n * 4 * channels.size());
  for (std::size_t c = 0; c < channels.size(); ++c)
    std::memcpy(bytes.data() + 352 + c * n * 4, channels[c].data.data(),
                n * 4);

  const bool gz = path.size() > 3 && path.ends_with(".gz");
  write_bytes(path, bytes, gz, gzip_level);
}

}  // namespace neurovolve::nifti

#endif  // NEUROVOLVE_NIFTI_HPP
