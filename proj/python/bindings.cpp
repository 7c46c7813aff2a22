#include <pybind11/eigen.h>
#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "geopipe/camera.hpp"
#include "geopipe/errors.hpp"
#include "geopipe/geodesy.hpp"
#include "geopipe/panorama.hpp"
#include "geopipe/provider.hpp"
#include "geopipe/reliability.hpp"
#include "geopipe/retrieval.hpp"
#include "geopipe/satellite.hpp"

namespace py = pybind11;
using namespace geopipe;

namespace {

ImageRgb8 rgb_from_array(const py::array_t<std::uint8_t>& arr) {
  const auto buf = arr.request();
  if (buf.ndim != 3 || buf.shape[2] != 3) {
    throw py::value_error("expected an (H, W, 3) uint8 array");
  }
  ImageRgb8 img(static_cast<int>(buf.shape[1]), static_cast<int>(buf.shape[0]), 3);
  const auto view = arr.unchecked<3>();
  for (py::ssize_t y = 0; y < buf.shape[0]; ++y) {
    for (py::ssize_t x = 0; x < buf.shape[1]; ++x) {
      for (int c = 0; c < 3; ++c) {
        img.at(static_cast<int>(x), static_cast<int>(y), c) = view(y, x, c);
      }
    }
  }
  return img;
}

py::array_t<std::uint8_t> rgb_to_array(const ImageRgb8& img) {
  py::array_t<std::uint8_t> arr({img.height(), img.width(), 3});
  auto view = arr.mutable_unchecked<3>();
  for (int y = 0; y < img.height(); ++y) {
    for (int x = 0; x < img.width(); ++x) {
      for (int c = 0; c < 3; ++c) view(y, x, c) = img.at(x, y, c);
    }
  }
  return arr;
}

Mask mask_from_array(const py::array_t<bool>& arr) {
  const auto buf = arr.request();
  if (buf.ndim != 2) throw py::value_error("expected an (H, W) bool array");
  Mask m(static_cast<int>(buf.shape[1]), static_cast<int>(buf.shape[0]), 1);
  const auto view = arr.unchecked<2>();
  for (py::ssize_t y = 0; y < buf.shape[0]; ++y) {
    for (py::ssize_t x = 0; x < buf.shape[1]; ++x) {
      m.at(static_cast<int>(x), static_cast<int>(y)) = view(y, x) ? kMaskOn : 0;
    }
  }
  return m;
}

py::array_t<bool> mask_to_array(const Mask& m) {
  py::array_t<bool> arr({m.height(), m.width()});
  auto view = arr.mutable_unchecked<2>();
  for (int y = 0; y < m.height(); ++y) {
    for (int x = 0; x < m.width(); ++x) view(y, x) = m.at(x, y) != 0;
  }
  return arr;
}

ImageF gray_from_array(const py::array_t<float>& arr) {
  const auto buf = arr.request();
  if (buf.ndim != 2) throw py::value_error("expected an (H, W) float32 array");
  ImageF img(static_cast<int>(buf.shape[1]), static_cast<int>(buf.shape[0]), 1);
  const auto view = arr.unchecked<2>();
  for (py::ssize_t y = 0; y < buf.shape[0]; ++y) {
    for (py::ssize_t x = 0; x < buf.shape[1]; ++x) {
      img.at(static_cast<int>(x), static_cast<int>(y)) = view(y, x);
    }
  }
  return img;
}

Eigen::Quaterniond quat_from_tuple(const std::array<double, 4>& q) {
  Eigen::Quaterniond out(q[0], q[1], q[2], q[3]);
  if (std::abs(out.norm() - 1.0) > 1e-6) {
    throw py::value_error("quaternion must be unit norm (w, x, y, z)");
  }
  return out;
}

}  // namespace

PYBIND11_MODULE(_geopipe, m) {
  m.doc() = "Geographic street-view retrieval and panorama alignment pipeline";

  py::register_exception<Error>(m, "GeopipeError");

  py::class_<GeoPoint>(m, "GeoPoint")
      .def(py::init<double, double, double>(), py::arg("lat"), py::arg("lon"),
           py::arg("alt") = 0.0)
      .def_readonly("lat", &GeoPoint::lat)
      .def_readonly("lon", &GeoPoint::lon)
      .def_readonly("alt", &GeoPoint::alt)
      .def("__repr__", [](const GeoPoint& p) {
        return "GeoPoint(lat=" + std::to_string(p.lat) +
               ", lon=" + std::to_string(p.lon) + ")";
      });

  // geodesy
  m.def(
      "planar_bearing_distance",
      [](double x, double y) {
        LocalPose p;
        p.x = x;
        p.y = y;
        const auto bd = planar_bearing_distance(p);
        return py::make_tuple(bd.bearing_rad, bd.distance_m);
      },
      py::arg("x"), py::arg("y"),
      "Compass bearing (radians, clockwise from north) and planar distance "
      "of a map-frame displacement.");
  m.def("geodesic_direct", &geodesic_direct, py::arg("origin"),
        py::arg("bearing_rad"), py::arg("distance_m"));
  m.def("geodesic_inverse", &geodesic_inverse, py::arg("a"), py::arg("b"));
  m.def(
      "pose_to_geo",
      [](const GeoPoint& anchor, double x, double y, double z) {
        LocalPose p;
        p.x = x;
        p.y = y;
        p.z = z;
        return pose_to_geo(MapAnchor{"", anchor}, p);
      },
      py::arg("anchor"), py::arg("x"), py::arg("y"), py::arg("z") = 0.0);

  // camera
  py::class_<Intrinsics>(m, "Intrinsics")
      .def_readonly("fx", &Intrinsics::fx)
      .def_readonly("fy", &Intrinsics::fy)
      .def_readonly("cx", &Intrinsics::cx)
      .def_readonly("cy", &Intrinsics::cy)
      .def_readonly("width", &Intrinsics::width)
      .def_readonly("height", &Intrinsics::height)
      .def("hfov", &Intrinsics::hfov);
  m.def("intrinsics_from_fov", &intrinsics_from_fov, py::arg("hfov_rad"),
        py::arg("width"), py::arg("height"));
  m.def(
      "pixel_to_ray",
      [](const Intrinsics& k, double u, double v) -> Eigen::Vector3d {
        return pixel_to_ray(k, u, v);
      },
      py::arg("intrinsics"), py::arg("u"), py::arg("v"));
  m.def(
      "project_to_pixel",
      [](const Intrinsics& k, const Eigen::Vector3d& dir) -> py::object {
        const auto px = project_to_pixel(k, dir);
        if (!px) return py::none();
        return py::make_tuple(px->x(), px->y());
      },
      py::arg("intrinsics"), py::arg("dir"),
      "Pixel of a camera-frame direction, or None when behind the camera.");
  m.def(
      "frustum_coords",
      [](const Intrinsics& k, const std::array<double, 4>& rotation,
         const Eigen::Vector3d& translation, const std::vector<double>& depths,
         const std::array<double, 6>& bounds) {
        Pose pose;
        pose.rotation = quat_from_tuple(rotation);
        pose.translation = translation;
        const FrustumGrid g = frustum_coords(
            k, pose, depths,
            FrustumBounds{bounds[0], bounds[1], bounds[2], bounds[3], bounds[4],
                          bounds[5]});
        py::array_t<float> arr(
            {g.height, g.width, static_cast<int>(g.depth_bins.size()), 3});
        std::copy(g.coords.begin(), g.coords.end(), arr.mutable_data());
        return arr;
      },
      py::arg("intrinsics"), py::arg("rotation"), py::arg("translation"),
      py::arg("depth_bins"), py::arg("bounds"),
      "Normalized per-pixel, per-depth 3D coordinates; bounds is "
      "(x_min, x_max, y_min, y_max, z_min, z_max).");
  m.def(
      "virtual_camera_for_frame",
      [](const GeoPoint& ego_geo, const GeoPoint& pano_geo,
         const std::array<double, 4>& ego_rotation,
         const std::array<double, 4>& cam_rotation) {
        LocalPose ego;
        ego.rotation = quat_from_tuple(ego_rotation);
        const Pose p = virtual_camera_for_frame(ego_geo, pano_geo, ego,
                                                quat_from_tuple(cam_rotation));
        return py::make_tuple(
            py::make_tuple(p.rotation.w(), p.rotation.x(), p.rotation.y(),
                           p.rotation.z()),
            p.translation);
      },
      py::arg("ego_geo"), py::arg("pano_geo"), py::arg("ego_rotation"),
      py::arg("cam_rotation"),
      "Virtual camera pose: ((qw, qx, qy, qz) camera-to-panorama rotation, "
      "ego-frame translation with z pinned to 2 m).");

  // panorama
  m.def(
      "dir_to_equirect",
      [](double theta, double phi, int width, int height) {
        const Eigen::Vector2d p = dir_to_equirect(theta, phi, width, height);
        return py::make_tuple(p.x(), p.y());
      },
      py::arg("theta"), py::arg("phi"), py::arg("width"), py::arg("height"));
  m.def(
      "equirect_to_dir",
      [](double x, double y, int width, int height) {
        const Eigen::Vector2d a = equirect_to_dir(x, y, width, height);
        return py::make_tuple(a.x(), a.y());
      },
      py::arg("x"), py::arg("y"), py::arg("width"), py::arg("height"));
  m.def("canonical_headings", &canonical_headings);
  m.def(
      "stitch",
      [](const std::vector<py::array_t<std::uint8_t>>& tiles,
         const std::vector<double>& headings, int pano_width, int pano_height,
         double fov_deg, int jobs) {
        if (tiles.size() != headings.size()) {
          throw py::value_error("tiles and headings length mismatch");
        }
        std::vector<PerspectiveTile> ts;
        ts.reserve(tiles.size());
        for (std::size_t i = 0; i < tiles.size(); ++i) {
          PerspectiveTile t;
          t.pixels = rgb_from_array(tiles[i]);
          t.intrinsics = intrinsics_from_fov(deg2rad(fov_deg), t.pixels.width(),
                                             t.pixels.height());
          t.heading_deg = headings[i];
          ts.push_back(std::move(t));
        }
        const EquirectPanorama pano =
            stitch(ts, pano_width, pano_height, GeoPoint(0, 0), "py", jobs);
        return py::make_tuple(rgb_to_array(pano.pixels), mask_to_array(pano.mask),
                              pano.complete);
      },
      py::arg("tiles"), py::arg("headings"),
      py::arg("pano_width") = kDefaultPanoWidth,
      py::arg("pano_height") = kDefaultPanoHeight, py::arg("fov_deg") = 60.0,
      py::arg("jobs") = 1,
      "Composites heading-sampled tiles into an equirectangular panorama; "
      "returns (pixels, coverage mask, complete).");
  m.def(
      "synthesize_view",
      [](const py::array_t<std::uint8_t>& pano, const py::array_t<bool>& mask,
         const std::array<double, 4>& rotation, double hfov_deg, int width,
         int height, int jobs, bool nearest) {
        EquirectPanorama p(static_cast<int>(pano.shape(1)),
                           static_cast<int>(pano.shape(0)));
        p.pixels = rgb_from_array(pano);
        p.mask = mask_from_array(mask);
        Pose pose;
        pose.rotation = quat_from_tuple(rotation);
        const SynthesizedView v = synthesize_view(
            p, intrinsics_from_fov(deg2rad(hfov_deg), width, height), pose, jobs,
            nearest ? SampleMode::kNearest : SampleMode::kBilinear);
        return py::make_tuple(rgb_to_array(v.image), mask_to_array(v.validity));
      },
      py::arg("pano"), py::arg("mask"), py::arg("rotation"),
      py::arg("hfov_deg"), py::arg("width"), py::arg("height"),
      py::arg("jobs") = 1, py::arg("nearest") = false,
      "Renders a pinhole view from the panorama; rotation is the "
      "camera-to-panorama quaternion (w, x, y, z).");
  m.def(
      "tile_rotation",
      [](double heading_deg, double pitch_deg) {
        const Eigen::Quaterniond q = tile_rotation(heading_deg, pitch_deg);
        return py::make_tuple(q.w(), q.x(), q.y(), q.z());
      },
      py::arg("heading_deg"), py::arg("pitch_deg") = 0.0);

  // mock provider scene
  m.def(
      "render_mock_tile",
      [](double heading_deg, double pitch_deg, double fov_deg, int size,
         const std::string& mode) {
        TileRequest req;
        req.pano_id = "py";
        req.heading_deg = heading_deg;
        req.pitch_deg = pitch_deg;
        req.fov_deg = fov_deg;
        req.size = size;
        return rgb_to_array(
            MockProvider::render_tile(req, alignment_mode_from_string(mode)));
      },
      py::arg("heading_deg"), py::arg("pitch_deg") = 0.0,
      py::arg("fov_deg") = 60.0, py::arg("size") = 640,
      py::arg("mode") = "aligned",
      "Analytic direction-encoded test tile (modes: aligned, indoor, "
      "wrong_level, parallel_road).");

  // satellite
  py::class_<SatMosaic>(m, "SatMosaic")
      .def(py::init([](const py::array_t<std::uint8_t>& pixels,
                       const GeoPoint& anchor, double gsd) {
             SatMosaic mo;
             mo.pixels = rgb_from_array(pixels);
             mo.anchor = anchor;
             mo.gsd = gsd;
             mo.validate();
             return mo;
           }),
           py::arg("pixels"), py::arg("anchor"), py::arg("gsd") = kDefaultGsd)
      .def_readonly("gsd", &SatMosaic::gsd);
  m.def(
      "geo_to_pixel",
      [](const SatMosaic& mo, const GeoPoint& p) {
        const Eigen::Vector2d px = geo_to_pixel(mo, p);
        return py::make_tuple(px.x(), px.y());
      },
      py::arg("mosaic"), py::arg("point"));
  m.def("pixel_to_geo", &pixel_to_geo, py::arg("mosaic"), py::arg("x"),
        py::arg("y"));
  m.def(
      "pose_crop",
      [](const SatMosaic& mo, const GeoPoint& ego, double yaw_rad, int size) {
        const PoseCrop c = pose_crop(mo, ego, yaw_rad, size);
        return py::make_tuple(rgb_to_array(c.pixels), c.padded);
      },
      py::arg("mosaic"), py::arg("ego"), py::arg("yaw_rad"),
      py::arg("size") = kDefaultCropSize,
      "Square crop with the ego forward direction toward +x (right).");

  // retrieval
  py::class_<RetrievalIndex>(m, "RetrievalIndex")
      .def_static(
          "build",
          [](const std::vector<std::pair<std::string, GeoPoint>>& entries,
             double cell_size_m) {
            std::vector<PanoEntry> es;
            es.reserve(entries.size());
            for (const auto& [id, p] : entries) es.push_back({id, p});
            return RetrievalIndex::build(std::move(es), cell_size_m);
          },
          py::arg("entries"), py::arg("cell_size_m") = kDefaultRetrievalThreshold)
      .def("__len__", &RetrievalIndex::size)
      .def(
          "nearest",
          [](const RetrievalIndex& idx, const GeoPoint& q, double threshold_m) {
            const RetrievalResult r = idx.nearest(q, threshold_m);
            return py::make_tuple(
                r.is_none() ? py::object(py::none()) : py::cast(r.pano_id),
                r.distance_m);
          },
          py::arg("query"), py::arg("threshold_m") = kDefaultRetrievalThreshold,
          "Nearest entry as (pano_id or None, distance_m); NONE when the "
          "distance exceeds the threshold.");
  m.def(
      "storage_report",
      [](const std::vector<std::optional<std::string>>& frame_panos,
         std::size_t cameras_per_frame, std::size_t tile_bytes,
         std::size_t crop_bytes) {
        Manifest man;
        int i = 0;
        for (const auto& pid : frame_panos) {
          FrameAssignment a;
          if (pid) {
            a.pano_id = *pid;
            man.panos.emplace(*pid, PanoRecord{});
          }
          man.frames.emplace("f" + std::to_string(i++), a);
        }
        const StorageReport r = storage_report(man, frame_panos.size(),
                                               cameras_per_frame, tile_bytes,
                                               crop_bytes);
        py::dict d;
        d["used_panos"] = r.used_panos;
        d["dedup_bytes"] = r.dedup_bytes;
        d["naive_bytes"] = r.naive_bytes;
        d["reduction_fraction"] = r.reduction_fraction;
        return d;
      },
      py::arg("frame_panos"), py::arg("cameras_per_frame"),
      py::arg("tile_bytes"), py::arg("crop_bytes"),
      "Dedup-vs-naive storage of a frame->pano assignment (None = NONE).");

  // reliability
  py::class_<GateParams>(m, "GateParams")
      .def(py::init([](double w1, double w2, double b, double s, double eps) {
             GateParams p;
             p.w1 = w1;
             p.w2 = w2;
             p.bias = b;
             p.s = s;
             p.eps = eps;
             return p;
           }),
           py::arg("w1") = -8.0, py::arg("w2") = -4.0, py::arg("b") = 4.0,
           py::arg("s") = kDefaultDistanceScale,
           py::arg("eps") = kDefaultZnccEps)
      .def_readwrite("w1", &GateParams::w1)
      .def_readwrite("w2", &GateParams::w2)
      .def_readwrite("bias", &GateParams::bias)
      .def_readwrite("s", &GateParams::s)
      .def_readwrite("eps", &GateParams::eps);
  m.def(
      "zncc_map",
      [](const py::array_t<float>& a, const py::array_t<float>& b, int kernel,
         double eps) {
        const Raster<double> z = zncc_map(gray_from_array(a), gray_from_array(b),
                                          kernel, eps);
        py::array_t<double> arr({z.height(), z.width()});
        std::copy(z.data(), z.data() + z.size(), arr.mutable_data());
        return arr;
      },
      py::arg("a"), py::arg("b"), py::arg("kernel") = kDefaultZnccKernel,
      py::arg("eps") = kDefaultZnccEps);
  m.def(
      "gate_features",
      [](const py::array_t<float>& onboard, const py::array_t<float>& geo,
         double d_gps_m, const GateParams& params) {
        const ImageF ob = gray_from_array(onboard);
        const ImageF raw = gray_from_array(geo);
        const ImageF aligned = align_geo_to_onboard(raw, ob.width(), ob.height());
        const GateFeatures f = gate_features(ob, aligned, d_gps_m, params);
        return py::make_tuple(f.diff_mean, f.dist_feat);
      },
      py::arg("onboard"), py::arg("geo"), py::arg("d_gps_m"),
      py::arg("params") = GateParams{},
      "(diff_mean, dist_feat) of an image pair; geo is rescaled and "
      "center-cropped to the onboard size first.");
  m.def(
      "gate_score",
      [](double diff_mean, double dist_feat, const GateParams& params) {
        return gate_score(GateFeatures{diff_mean, dist_feat}, params);
      },
      py::arg("diff_mean"), py::arg("dist_feat"),
      py::arg("params") = GateParams{});
  m.def(
      "calibrate",
      [](const py::array_t<double>& features, const py::array_t<int>& labels,
         int epochs, double lr, std::uint64_t seed) {
        const auto f = features.unchecked<2>();
        const auto l = labels.unchecked<1>();
        if (f.shape(1) != 2 || f.shape(0) != l.shape(0)) {
          throw py::value_error("features must be (N, 2) with N labels");
        }
        std::vector<LabeledFeatures> samples;
        samples.reserve(f.shape(0));
        for (py::ssize_t i = 0; i < f.shape(0); ++i) {
          samples.push_back({GateFeatures{f(i, 0), f(i, 1)}, l(i)});
        }
        const CalibrationResult res = calibrate(samples, epochs, lr, seed);
        py::dict d;
        d["params"] = res.params;
        d["final_bce"] = gate_bce(samples, res.params);
        d["loss_per_epoch"] = res.loss_per_epoch;
        return d;
      },
      py::arg("features"), py::arg("labels"), py::arg("epochs") = 500,
      py::arg("lr") = 0.1, py::arg("seed") = 0);
  m.def(
      "synthetic_gate_samples",
      [](int n_per_class, double sigma, std::uint64_t seed) {
        const auto samples = synthetic_gate_samples(n_per_class, sigma, seed);
        py::array_t<double> features(
            {static_cast<py::ssize_t>(samples.size()), py::ssize_t(2)});
        py::array_t<int> labels(static_cast<py::ssize_t>(samples.size()));
        auto fv = features.mutable_unchecked<2>();
        auto lv = labels.mutable_unchecked<1>();
        for (std::size_t i = 0; i < samples.size(); ++i) {
          fv(static_cast<py::ssize_t>(i), 0) = samples[i].features.diff_mean;
          fv(static_cast<py::ssize_t>(i), 1) = samples[i].features.dist_feat;
          lv(static_cast<py::ssize_t>(i)) = samples[i].label;
        }
        return py::make_tuple(features, labels);
      },
      py::arg("n_per_class") = 200, py::arg("sigma") = 0.1, py::arg("seed") = 0);

  m.attr("DEFAULT_THRESHOLD_M") = kDefaultRetrievalThreshold;
  m.attr("DEFAULT_GSD") = kDefaultGsd;
  m.attr("PANO_WIDTH") = kDefaultPanoWidth;
  m.attr("PANO_HEIGHT") = kDefaultPanoHeight;
}
