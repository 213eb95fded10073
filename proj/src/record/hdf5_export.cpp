#include "burrsim/record/hdf5_export.hpp"

#include "burrsim/core/errors.hpp"
#include "burrsim/record/recorder.hpp"

#ifdef BURRSIM_HAVE_HDF5
#include <hdf5.h>
#endif

#include <array>
#include <vector>

namespace burrsim {

#ifdef BURRSIM_HAVE_HDF5

namespace {

class Handle {
public:
    Handle(hid_t id, herr_t (*closer)(hid_t), const std::string& what) : id_(id), closer_(closer)
    {
        if (id_ < 0) {
            fail(ErrorKind::Io, "HDF5: cannot create " + what);
        }
    }
    ~Handle() { closer_(id_); }
    Handle(const Handle&) = delete;
    Handle& operator=(const Handle&) = delete;
    operator hid_t() const noexcept { return id_; }

private:
    hid_t id_;
    herr_t (*closer_)(hid_t);
};

template <typename T>
hid_t native_type();
template <>
hid_t native_type<double>() { return H5T_NATIVE_DOUBLE; }
template <>
hid_t native_type<float>() { return H5T_NATIVE_FLOAT; }
template <>
hid_t native_type<std::uint32_t>() { return H5T_NATIVE_UINT32; }
template <>
hid_t native_type<std::uint16_t>() { return H5T_NATIVE_UINT16; }
template <>
hid_t native_type<std::uint8_t>() { return H5T_NATIVE_UINT8; }

// Row-major [rows x cols] dataset; cols == 1 writes a 1-D dataset.
template <typename T>
void write_dataset(hid_t group, const char* name, const std::vector<T>& data, hsize_t cols = 1)
{
    const hsize_t rows = cols == 0 ? 0 : data.size() / cols;
    const hsize_t dims[2] = {rows, cols};
    Handle space(H5Screate_simple(cols == 1 ? 1 : 2, dims, nullptr), H5Sclose, std::string("dataspace ") + name);
    Handle set(H5Dcreate2(group, name, native_type<T>(), space, H5P_DEFAULT, H5P_DEFAULT, H5P_DEFAULT), H5Dclose,
               std::string("dataset ") + name);
    if (!data.empty() && H5Dwrite(set, native_type<T>(), H5S_ALL, H5S_ALL, H5P_DEFAULT, data.data()) < 0) {
        fail(ErrorKind::Io, std::string("HDF5: cannot write dataset ") + name);
    }
}

void write_string_attr(hid_t obj, const char* name, const std::string& value)
{
    Handle type(H5Tcopy(H5T_C_S1), H5Tclose, "string type");
    H5Tset_size(type, value.empty() ? 1 : value.size());
    H5Tset_strpad(type, H5T_STR_NULLTERM);
    Handle space(H5Screate(H5S_SCALAR), H5Sclose, "scalar dataspace");
    Handle attr(H5Acreate2(obj, name, type, space, H5P_DEFAULT, H5P_DEFAULT), H5Aclose, std::string("attribute ") + name);
    if (H5Awrite(attr, type, value.c_str()) < 0) {
        fail(ErrorKind::Io, std::string("HDF5: cannot write attribute ") + name);
    }
}

void push_pose(std::vector<double>& pos, std::vector<double>& quat, const Pose& p)
{
    pos.insert(pos.end(), {p.position.x, p.position.y, p.position.z});
    quat.insert(quat.end(), {p.orientation.w, p.orientation.x, p.orientation.y, p.orientation.z});
}

} // namespace

bool hdf5_available() noexcept { return true; }

void export_hdf5(const std::filesystem::path& recording_dir, const std::filesystem::path& out_file)
{
    RecordingReader reader(recording_dir);

    std::vector<double> vr_t;
    std::vector<std::uint32_t> vr_index;
    std::vector<std::uint16_t> vr_label;
    std::vector<float> vr_color;
    std::vector<double> ff_t, ff_force;
    std::vector<double> bc_t, bc_radius;
    std::vector<std::uint8_t> bc_tip;
    std::vector<double> k_t, k_dpos, k_dquat, k_cpos, k_cquat;
    std::vector<double> df_t;
    std::vector<std::uint32_t> df_size, df_offset;
    std::vector<float> dd_depth;
    std::vector<std::uint16_t> dd_labels;

    while (auto ev = reader.next()) {
        std::visit(
            [&](const auto& e) {
                using T = std::decay_t<decltype(e)>;
                if constexpr (std::is_same_v<T, VoxelRemovedEvent>) {
                    vr_t.push_back(e.t);
                    vr_index.insert(vr_index.end(), {e.index.i, e.index.j, e.index.k});
                    vr_label.push_back(e.label);
                    vr_color.insert(vr_color.end(), e.color.begin(), e.color.end());
                } else if constexpr (std::is_same_v<T, ForceSampleEvent>) {
                    ff_t.push_back(e.t);
                    ff_force.insert(ff_force.end(), {e.force.x, e.force.y, e.force.z});
                } else if constexpr (std::is_same_v<T, BurrChangeEvent>) {
                    bc_t.push_back(e.t);
                    bc_radius.push_back(e.radius_mm);
                    bc_tip.push_back(static_cast<std::uint8_t>(e.tip));
                } else if constexpr (std::is_same_v<T, KinematicsEvent>) {
                    k_t.push_back(e.t);
                    push_pose(k_dpos, k_dquat, e.drill);
                    push_pose(k_cpos, k_cquat, e.camera);
                } else {
                    df_t.push_back(e.t);
                    df_size.insert(df_size.end(), {e.width, e.height});
                    df_offset.push_back(static_cast<std::uint32_t>(dd_depth.size()));
                    dd_depth.insert(dd_depth.end(), e.depth_mm.begin(), e.depth_mm.end());
                    dd_labels.insert(dd_labels.end(), e.labels.begin(), e.labels.end());
                }
            },
            *ev);
    }

    Handle file(H5Fcreate(out_file.string().c_str(), H5F_ACC_TRUNC, H5P_DEFAULT, H5P_DEFAULT), H5Fclose,
                "file " + out_file.string());
    auto group = [&](const char* name) {
        return std::make_unique<Handle>(H5Gcreate2(file, name, H5P_DEFAULT, H5P_DEFAULT, H5P_DEFAULT), H5Gclose,
                                        std::string("group ") + name);
    };
    {
        auto g = group("voxels_removed");
        write_dataset(*g, "t", vr_t);
        write_dataset(*g, "index", vr_index, 3);
        write_dataset(*g, "label", vr_label);
        write_dataset(*g, "color", vr_color, 3);
    }
    {
        auto g = group("force_feedback");
        write_dataset(*g, "t", ff_t);
        write_dataset(*g, "force", ff_force, 3);
    }
    {
        auto g = group("burr_change");
        write_dataset(*g, "t", bc_t);
        write_dataset(*g, "radius_mm", bc_radius);
        write_dataset(*g, "tip", bc_tip);
    }
    {
        auto g = group("kinematics");
        write_dataset(*g, "t", k_t);
        write_dataset(*g, "drill_position", k_dpos, 3);
        write_dataset(*g, "drill_orientation", k_dquat, 4);
        write_dataset(*g, "camera_position", k_cpos, 3);
        write_dataset(*g, "camera_orientation", k_cquat, 4);
    }
    {
        auto g = group("depth_frames");
        write_dataset(*g, "t", df_t);
        write_dataset(*g, "size", df_size, 2);
        write_dataset(*g, "offset", df_offset);
        write_dataset(*g, "depth_mm", dd_depth);
        write_dataset(*g, "labels", dd_labels);
    }
    {
        auto g = group("metadata");
        write_string_attr(*g, "meta_json", to_json(reader.meta()).dump());
        write_string_attr(*g, "manifest_json", to_json(reader.manifest()).dump());
    }
}

#else

bool hdf5_available() noexcept { return false; }

void export_hdf5(const std::filesystem::path&, const std::filesystem::path&)
{
    fail(ErrorKind::Unsupported, "this build has no HDF5 support");
}

#endif

} // namespace burrsim
