/**
 * Three.js scene: both clouds as point sprites, orbit camera, pick markers,
 * and the alignment preview overlay.
 *
 * The target cloud arrives colorless and is tinted steel blue; the source
 * keeps its own colors. Side-by-side mode shifts the source cloud along X
 * by a scene-derived offset; picking maps screen clicks back through the
 * same offset, so the reported coordinates are always true world points.
 */

import * as THREE from "three";
import { OrbitControls } from "three/examples/jsm/controls/OrbitControls.js";

import type { CloudData } from "./framing";
import type { CloudName } from "./api";
import type { PairRecord } from "./api";
import { nearestScreenPoint, type SnapHit } from "./projection";

const TARGET_TINT = new THREE.Color(0x6f9fc8);
const SOURCE_FALLBACK = new THREE.Color(0xe0995a);
const PREVIEW_COLOR = new THREE.Color(0x59d08a);

export interface PickResult {
  cloud: CloudName;
  point: [number, number, number];
  index: number;
}

function cloudGeometry(data: CloudData, fallback: THREE.Color): THREE.BufferGeometry {
  const geometry = new THREE.BufferGeometry();
  geometry.setAttribute("position", new THREE.BufferAttribute(data.points, 3));
  const colors = new Float32Array(data.count * 3);
  if (data.colors) {
    for (let i = 0; i < data.count * 3; i++) colors[i] = data.colors[i] / 255;
  } else {
    for (let i = 0; i < data.count; i++) {
      colors[3 * i] = fallback.r;
      colors[3 * i + 1] = fallback.g;
      colors[3 * i + 2] = fallback.b;
    }
  }
  geometry.setAttribute("color", new THREE.BufferAttribute(colors, 3));
  geometry.computeBoundingSphere();
  return geometry;
}

export class Viewer {
  readonly scene = new THREE.Scene();
  readonly camera: THREE.PerspectiveCamera;
  readonly renderer: THREE.WebGLRenderer;
  readonly controls: OrbitControls;
  snapRadiusPx = 8;

  private source: THREE.Points | null = null;
  private target: THREE.Points | null = null;
  private preview: THREE.Points | null = null;
  private sourceData: CloudData | null = null;
  private targetData: CloudData | null = null;
  private markers = new THREE.Group();
  private sideBySide = false;
  private sourceOffset = 0;

  constructor(readonly canvas: HTMLCanvasElement) {
    this.renderer = new THREE.WebGLRenderer({ canvas, antialias: true });
    this.camera = new THREE.PerspectiveCamera(55, 1, 0.05, 5000);
    this.camera.up.set(0, 0, 1); // clouds are z-up
    this.scene.background = new THREE.Color(0x10141a);
    this.scene.add(this.markers);
    this.controls = new OrbitControls(this.camera, canvas);
    this.controls.enableDamping = true;
    const animate = () => {
      this.controls.update();
      this.renderer.render(this.scene, this.camera);
      requestAnimationFrame(animate);
    };
    requestAnimationFrame(animate);
  }

  resize(width: number, height: number): void {
    this.renderer.setSize(width, height, false);
    this.camera.aspect = width / height;
    this.camera.updateProjectionMatrix();
  }

  setClouds(source: CloudData, target: CloudData): void {
    for (const old of [this.source, this.target]) {
      if (old) {
        this.scene.remove(old);
        old.geometry.dispose();
      }
    }
    this.sourceData = source;
    this.targetData = target;
    const material = new THREE.PointsMaterial({
      size: 2.2,
      sizeAttenuation: false,
      vertexColors: true,
    });
    this.source = new THREE.Points(cloudGeometry(source, SOURCE_FALLBACK), material);
    this.target = new THREE.Points(cloudGeometry(target, TARGET_TINT), material.clone());
    this.scene.add(this.source);
    this.scene.add(this.target);

    const sphere = new THREE.Sphere();
    this.source.geometry.boundingSphere!.union(
      this.target.geometry.boundingSphere!.clone(),
    );
    sphere.copy(this.source.geometry.boundingSphere!);
    this.sourceOffset = sphere.radius * 2.4;
    this.camera.position.set(
      sphere.center.x + sphere.radius * 1.6,
      sphere.center.y - sphere.radius * 1.6,
      sphere.center.z + sphere.radius * 1.4,
    );
    this.controls.target.copy(sphere.center);
    this.applyLayout();
  }

  setSideBySide(enabled: boolean): void {
    this.sideBySide = enabled;
    this.applyLayout();
  }

  private applyLayout(): void {
    // markers are rebuilt by the controller after layout changes
    if (this.source) {
      this.source.position.x = this.sideBySide ? -this.sourceOffset : 0;
    }
  }

  setPreview(data: CloudData | null): void {
    if (this.preview) {
      this.scene.remove(this.preview);
      this.preview.geometry.dispose();
      this.preview = null;
    }
    if (data) {
      const geometry = cloudGeometry(data, PREVIEW_COLOR);
      // preview ignores source colors so the overlay reads as one layer
      const colors = geometry.getAttribute("color") as THREE.BufferAttribute;
      for (let i = 0; i < colors.count; i++) {
        colors.setXYZ(i, PREVIEW_COLOR.r, PREVIEW_COLOR.g, PREVIEW_COLOR.b);
      }
      this.preview = new THREE.Points(
        geometry,
        new THREE.PointsMaterial({
          size: 2.2,
          sizeAttenuation: false,
          vertexColors: true,
        }),
      );
      this.scene.add(this.preview);
    }
  }

  /** Hide the misregistered source while the preview overlay is up. */
  setSourceVisible(visible: boolean): void {
    if (this.source) this.source.visible = visible;
  }

  /** Snap a canvas click to the nearest rendered point of either cloud. */
  pick(clickX: number, clickY: number): PickResult | null {
    const width = this.canvas.clientWidth || this.canvas.width;
    const height = this.canvas.clientHeight || this.canvas.height;
    this.camera.updateMatrixWorld();
    const vp = new THREE.Matrix4().multiplyMatrices(
      this.camera.projectionMatrix,
      this.camera.matrixWorldInverse,
    );
    let best: { cloud: CloudName; hit: SnapHit; data: CloudData; dx: number } | null =
      null;
    const candidates: Array<[CloudName, THREE.Points | null, CloudData | null]> = [
      ["source", this.source, this.sourceData],
      ["target", this.target, this.targetData],
    ];
    for (const [cloud, object, data] of candidates) {
      if (!object || !data || !object.visible) continue;
      const mvp = new THREE.Matrix4().multiplyMatrices(vp, object.matrixWorld);
      const hit = nearestScreenPoint(
        data.points, mvp.elements, width, height, clickX, clickY,
        this.snapRadiusPx,
      );
      if (!hit) continue;
      if (
        best === null ||
        hit.distancePx < best.hit.distancePx ||
        (hit.distancePx === best.hit.distancePx && hit.depth < best.hit.depth)
      ) {
        best = { cloud, hit, data, dx: object.position.x };
      }
    }
    if (!best) return null;
    const i = best.hit.index;
    return {
      cloud: best.cloud,
      point: [
        best.data.points[3 * i],
        best.data.points[3 * i + 1],
        best.data.points[3 * i + 2],
      ],
      index: i,
    };
  }

  /** Rebuild pick markers: spheres per pick, a line per pair, selection
   * rendered brighter and larger. */
  setMarkers(
    pairs: PairRecord[],
    pending: { cloud: CloudName; point: [number, number, number] } | null,
    selectedId: number | null,
  ): void {
    this.markers.clear();
    const mk = (
      p: [number, number, number],
      color: number,
      dx: number,
      big: boolean,
    ) => {
      const mesh = new THREE.Mesh(
        new THREE.SphereGeometry(big ? 0.45 : 0.3, 12, 12),
        new THREE.MeshBasicMaterial({ color }),
      );
      mesh.position.set(p[0] + dx, p[1], p[2]);
      this.markers.add(mesh);
    };
    const sourceDx = this.source ? this.source.position.x : 0;
    for (const pair of pairs) {
      const selected = pair.id === selectedId;
      mk(pair.source_point, selected ? 0xff5544 : 0xcc4433, sourceDx, selected);
      mk(pair.target_point, selected ? 0x55aaff : 0x3377cc, 0, selected);
      const geometry = new THREE.BufferGeometry().setFromPoints([
        new THREE.Vector3(
          pair.source_point[0] + sourceDx,
          pair.source_point[1],
          pair.source_point[2],
        ),
        new THREE.Vector3(...pair.target_point),
      ]);
      this.markers.add(
        new THREE.Line(
          geometry,
          new THREE.LineBasicMaterial({
            color: selected ? 0xffee66 : 0x888844,
            transparent: !selected,
            opacity: selected ? 1.0 : 0.5,
          }),
        ),
      );
    }
    if (pending) {
      mk(pending.point, 0xffcc00, pending.cloud === "source" ? sourceDx : 0, true);
    }
  }
}
