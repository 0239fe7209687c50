#include <catch2/catch_amalgamated.hpp>

#include "bopask/world_frame.hpp"

using namespace bopask;

namespace {

CameraIntrinsics test_cam(int w = 64, int h = 48) {
    CameraIntrinsics k;
    k.fx = k.fy = 50;
    k.cx = w / 2.0;
    k.cy = h / 2.0;
    k.width = w;
    k.height = h;
    k.depth_scale = 1.0;  // raw == millimeters
    return k;
}

SceneFrame constant_depth_frame(std::uint16_t depth_mm, int w = 64, int h = 48) {
    SceneFrame f;
    f.intrinsics = test_cam(w, h);
    f.depth.width = w;
    f.depth.height = h;
    f.depth.data.assign(static_cast<std::size_t>(w) * h, depth_mm);
    return f;
}

PointCloud grid_on_plane(double z, int nx, int ny, double extent) {
    PointCloud cloud;
    for (int i = 0; i < nx; ++i)
        for (int j = 0; j < ny; ++j) {
            cloud.points.push_back({-extent + 2 * extent * i / (nx - 1),
                                    -extent + 2 * extent * j / (ny - 1), z});
            cloud.pixel_indices.push_back(static_cast<int>(cloud.points.size()) - 1);
        }
    return cloud;
}

ModelTable one_box_table() {
    ModelTable t;
    ModelInfo m;
    m.obj_id = 1;
    m.size = {40, 40, 40};
    m.diameter = m.size.norm();
    m.category_name = "box";
    m.description = "box";
    t[1] = m;
    return t;
}

}  // namespace

TEST_CASE("backproject_depth: principal pixel lands on the principal ray") {
    SceneFrame f = constant_depth_frame(2000);
    const PointCloud cloud = backproject_depth(f, 1);
    const int idx = (f.intrinsics.height / 2) * f.depth.width + f.intrinsics.width / 2;
    bool found = false;
    for (std::size_t i = 0; i < cloud.size(); ++i) {
        if (cloud.pixel_indices[i] == idx) {
            CHECK((cloud.points[i] - Vec3(0, 0, 2.0)).norm() < 1e-12);
            found = true;
        }
    }
    CHECK(found);
}

TEST_CASE("backproject_depth: hand-computed pinhole case") {
    // pixel (cx+fx, cy) at depth 1m -> point (1, 0, 1)
    SceneFrame f = constant_depth_frame(1000, 128, 96);
    f.intrinsics.cx = 30;
    f.intrinsics.cy = 48;
    const int u = static_cast<int>(f.intrinsics.cx + f.intrinsics.fx);
    const int v = static_cast<int>(f.intrinsics.cy);
    const PointCloud cloud = backproject_depth(f, 1);
    const int idx = v * f.depth.width + u;
    for (std::size_t i = 0; i < cloud.size(); ++i)
        if (cloud.pixel_indices[i] == idx)
            CHECK((cloud.points[i] - Vec3(1.0, 0, 1.0)).norm() < 1e-12);
}

TEST_CASE("backproject_depth: stride-4 counting oracle") {
    SceneFrame f = constant_depth_frame(1500, 63, 49);
    const PointCloud cloud = backproject_depth(f, 4);
    const std::size_t expect = ((63 + 3) / 4) * ((49 + 3) / 4);
    CHECK(cloud.size() == expect);
}

TEST_CASE("backproject_depth: all-invalid depth raises no_depth") {
    SceneFrame f = constant_depth_frame(0);
    CHECK_THROWS_AS(backproject_depth(f, 1), WorldFrameError);
}

TEST_CASE("ransac_plane recovers a noiseless plane under 5% outliers") {
    PointCloud cloud = grid_on_plane(0.5, 30, 30, 0.6);
    Rng rng(99);
    const std::size_t n_out = cloud.size() / 20;
    for (std::size_t i = 0; i < n_out; ++i) {
        cloud.points.push_back({rng.uniform(-1, 1), rng.uniform(-1, 1),
                                rng.uniform(0.9, 2.0)});
        cloud.pixel_indices.push_back(static_cast<int>(cloud.points.size()) - 1);
    }
    const Plane plane = ransac_plane(cloud, 300, 0.008, 42);

    // least-squares oracle over the true inlier subset
    std::vector<int> truth(900);
    for (int i = 0; i < 900; ++i) truth[i] = i;
    // (exact plane: normal +-z, offset 0.5)
    CHECK(std::abs(plane.normal.z()) > std::cos(deg2rad(1.0)));
    CHECK(std::abs(plane.signed_distance({0, 0, 0.5})) < 1e-9);
    CHECK(plane.inlier_indices.size() == 900);
}

TEST_CASE("ransac_plane fits 3 non-collinear points exactly") {
    PointCloud cloud;
    cloud.points = {{0, 0, 1}, {1, 0, 1.2}, {0, 1, 0.8}};
    cloud.pixel_indices = {0, 1, 2};
    const Plane plane = ransac_plane(cloud, 50, 0.01, 7);
    for (const Vec3& p : cloud.points)
        CHECK(std::abs(plane.signed_distance(p)) < 1e-9);
    CHECK(plane.inlier_indices.size() == 3);  // inlier ratio 1
}

TEST_CASE("ransac_plane picks the dominant of two parallel planes") {
    PointCloud cloud = grid_on_plane(0.4, 27, 26, 0.5);  // 702 points
    const PointCloud upper = grid_on_plane(0.8, 17, 18, 0.5);  // 306 points
    for (const Vec3& p : upper.points) {
        cloud.points.push_back(p);
        cloud.pixel_indices.push_back(static_cast<int>(cloud.points.size()) - 1);
    }
    const Plane plane = ransac_plane(cloud, 500, 0.008, 3);
    CHECK(std::abs(plane.normal.z()) > 0.999);
    CHECK(std::abs(plane.signed_distance({0, 0, 0.4})) < 1e-6);
}

TEST_CASE("ransac_plane is deterministic for a fixed seed") {
    PointCloud cloud = grid_on_plane(0.5, 25, 25, 0.5);
    Rng rng(5);
    for (int i = 0; i < 60; ++i) {
        cloud.points.push_back({rng.uniform(-1, 1), rng.uniform(-1, 1),
                                rng.uniform(0.9, 1.8)});
        cloud.pixel_indices.push_back(static_cast<int>(cloud.points.size()) - 1);
    }
    const Plane a = ransac_plane(cloud, 200, 0.008, 123);
    const Plane b = ransac_plane(cloud, 200, 0.008, 123);
    CHECK(a.normal == b.normal);
    CHECK(a.offset == b.offset);
    CHECK(a.inlier_indices == b.inlier_indices);
}

TEST_CASE("ransac_plane rejects degenerate collinear input") {
    PointCloud cloud;
    for (int i = 0; i < 10; ++i) {
        cloud.points.push_back({0.1 * i, 0.2 * i, 1.0 + 0.05 * i});
        cloud.pixel_indices.push_back(i);
    }
    CHECK_THROWS_AS(ransac_plane(cloud, 100, 0.005, 1), WorldFrameError);
}

TEST_CASE("resolve_plane_ambiguity flips toward the objects") {
    Plane plane;
    plane.normal = {0, 0, -1};
    plane.offset = -1.5;  // plane z = 1.5, normal toward camera
    ModelTable models = one_box_table();
    // object sits at z = 1.3 (between camera and table): signed distance
    // under (0,0,-1) is -1.3 + 1.5 = +0.2, already positive -> unchanged.
    std::vector<ObjectInstance> inst(1);
    inst[0].obj_id = 1;
    inst[0].pose_cam.translation = {0, 0, 1300};
    const Plane kept = resolve_plane_ambiguity(plane, inst, models);
    CHECK(kept.normal.z() == -1.0);

    // flipped input gets corrected back
    Plane wrong;
    wrong.normal = {0, 0, 1};
    wrong.offset = 1.5;
    const Plane fixed = resolve_plane_ambiguity(wrong, inst, models);
    CHECK(fixed.normal.z() == -1.0);
    CHECK(fixed.offset == -1.5);
}

TEST_CASE("resolve_plane_ambiguity straddle and tie handling") {
    ModelTable models = one_box_table();
    Plane plane;
    plane.normal = {0, 0, 1};
    plane.offset = 1.0;  // plane z = 1.0

    // majority (2 of 3) below the plane in +z sense: mean negative -> flip
    std::vector<ObjectInstance> inst(3);
    for (auto& i : inst) i.obj_id = 1;
    inst[0].pose_cam.translation = {0, 0, 950};   // +z side? dist = -0.05
    inst[1].pose_cam.translation = {0, 0, 940};
    inst[2].pose_cam.translation = {0, 0, 1030};  // dist = +0.03
    const Plane flipped = resolve_plane_ambiguity(plane, inst, models);
    CHECK(flipped.normal.z() == -1.0);

    // exact tie keeps the input sign
    std::vector<ObjectInstance> tie(2);
    for (auto& i : tie) i.obj_id = 1;
    tie[0].pose_cam.translation = {0, 0, 900};
    tie[1].pose_cam.translation = {0, 0, 1100};
    const Plane kept = resolve_plane_ambiguity(plane, tie, models);
    CHECK(kept.normal.z() == 1.0);
}

TEST_CASE("rodrigues_align: identity, 90 degree, and antiparallel cases") {
    CHECK((rodrigues_align({0, 0, 1}) - Mat3::Identity()).cwiseAbs().maxCoeff() < 1e-12);

    const Mat3 r90 = rodrigues_align({0, 1, 0});
    CHECK((r90 * Vec3(0, 0, 1) - Vec3(0, 1, 0)).norm() < 1e-9);
    CHECK(std::abs(r90.determinant() - 1.0) < 1e-9);

    const Mat3 rflip = rodrigues_align({0, 0, -1});
    CHECK((rflip * Vec3(0, 0, 1) - Vec3(0, 0, -1)).norm() < 1e-12);
    // canonical fallback axis (1,0,0): x stays put
    CHECK((rflip * Vec3(1, 0, 0) - Vec3(1, 0, 0)).norm() < 1e-12);
}

TEST_CASE("rodrigues_align satisfies its postcondition on random normals") {
    Rng rng(31);
    for (int i = 0; i < 300; ++i) {
        const Vec3 n = Vec3(rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-1, 1))
                           .normalized();
        const Mat3 r = rodrigues_align(n);
        CHECK((r * Vec3(0, 0, 1) - n).norm() < 1e-9);
        CHECK((r.transpose() * r - Mat3::Identity()).cwiseAbs().maxCoeff() < 1e-9);
        CHECK(std::abs(r.determinant() - 1.0) < 1e-9);
    }
}

TEST_CASE("refine_yaw rotates a 45-degree line onto +X") {
    // inliers along the 45-degree direction in the plane z=1
    PointCloud cloud;
    Plane plane;
    plane.normal = {0, 0, 1};
    plane.offset = 1.0;
    for (int i = -20; i <= 20; ++i) {
        const double s = i * 0.01;
        cloud.points.push_back({s * std::cos(M_PI / 4), s * std::sin(M_PI / 4), 1.0});
        cloud.pixel_indices.push_back(i + 20);
        plane.inlier_indices.push_back(i + 20);
    }
    const Mat3 refined = refine_yaw(plane, cloud, Mat3::Identity());
    // PCA by hand: first PC is (cos45, sin45); correction is Rz(-45deg)
    const Mat3 expect = rot_z(-M_PI / 4);
    CHECK((refined - expect).cwiseAbs().maxCoeff() < 1e-9);
}

TEST_CASE("refine_yaw leaves isotropic inliers untouched") {
    PointCloud cloud;
    Plane plane;
    plane.normal = {0, 0, 1};
    plane.offset = 1.0;
    int idx = 0;
    for (int ring = 1; ring <= 5; ++ring) {
        for (int k = 0; k < 72; ++k) {
            const double a = 2 * M_PI * k / 72;
            const double r = 0.2 * ring;
            cloud.points.push_back({r * std::cos(a), r * std::sin(a), 1.0});
            cloud.pixel_indices.push_back(idx);
            plane.inlier_indices.push_back(idx++);
        }
    }
    const Mat3 base = rot_z(0.3);
    const Mat3 refined = refine_yaw(plane, cloud, base);
    CHECK((refined - base).cwiseAbs().maxCoeff() == 0.0);  // returned unchanged
}

TEST_CASE("refine_yaw keeps an already-aligned rectangle fixed") {
    PointCloud cloud;
    Plane plane;
    plane.normal = {0, 0, 1};
    plane.offset = 1.0;
    int idx = 0;
    for (int i = -10; i <= 10; ++i)
        for (int j = -4; j <= 4; ++j) {
            cloud.points.push_back({i * 0.05, j * 0.02, 1.0});
            cloud.pixel_indices.push_back(idx);
            plane.inlier_indices.push_back(idx++);
        }
    const Mat3 refined = refine_yaw(plane, cloud, Mat3::Identity());
    CHECK((refined - Mat3::Identity()).cwiseAbs().maxCoeff() < 1e-6);
}

TEST_CASE("build_world_transform on a synthetic fronto-parallel table") {
    // camera looking straight at a plane 1.5 m away; treat it as topdown-lite
    SceneFrame f = constant_depth_frame(1500, 96, 72);
    ModelTable models = one_box_table();
    ObjectInstance inst;
    inst.instance_id = 0;
    inst.obj_id = 1;
    inst.pose_cam.translation = {0, 0, 1480};  // 20 mm above the table toward camera
    f.instances.push_back(inst);

    WorldFrameParams params;
    params.ransac_iterations = 200;
    params.seed = 9;
    const WorldTransform world = build_world_transform(f, models, params);

    CHECK(world.cam_to_world.is_orthonormal(1e-9));
    CHECK(world.inlier_ratio > 0.99);

    // plane points map to z ~ 0
    const PointCloud cloud = backproject_depth(f, 2);
    for (std::size_t i = 0; i < cloud.size(); i += 97) {
        const Vec3 w = world.cam_to_world.apply(cloud.points[i]);
        CHECK(std::abs(w.z()) < 0.008);
    }
    // object centroid above the table
    const Vec3 c_world = world.to_world_mm(instance_centroid_cam_mm(inst, models));
    CHECK(c_world.z() > 0.0);
}

TEST_CASE("build_world_transform propagates no_depth") {
    SceneFrame f = constant_depth_frame(0);
    ModelTable models = one_box_table();
    CHECK_THROWS_AS(build_world_transform(f, models, {}), WorldFrameError);
}
