/** Orbitable 3D view of the evolving assembly. */

import * as THREE from "three";
import { OrbitControls } from "three/examples/jsm/controls/OrbitControls.js";
import { viewDirection, type Vec3 } from "./camera.js";
import { boundingRadius, parseObj } from "./obj.js";

export class ModelViewer {
  private scene = new THREE.Scene();
  private camera: THREE.PerspectiveCamera;
  private renderer: THREE.WebGLRenderer;
  private controls: OrbitControls;
  private modelGroup = new THREE.Group();

  constructor(container: HTMLElement) {
    const w = container.clientWidth || 480;
    const h = container.clientHeight || 480;
    this.camera = new THREE.PerspectiveCamera(40, w / h, 0.01, 100);
    this.renderer = new THREE.WebGLRenderer({ antialias: true });
    this.renderer.setSize(w, h);
    this.renderer.setClearColor(0xf7f7f7);
    container.appendChild(this.renderer.domElement);
    this.controls = new OrbitControls(this.camera, this.renderer.domElement);
    this.controls.enableDamping = true;

    this.scene.add(new THREE.AmbientLight(0xffffff, 0.7));
    const key = new THREE.DirectionalLight(0xffffff, 0.8);
    key.position.set(2, -3, 4);
    this.scene.add(key);
    this.scene.add(this.modelGroup);
    // engine datasets are z-up
    this.camera.up.set(0, 0, 1);
    this.camera.position.set(0, -2.2, 1.0);
    this.controls.target.set(0, 0, 0.4);

    const animate = () => {
      requestAnimationFrame(animate);
      this.controls.update();
      this.renderer.render(this.scene, this.camera);
    };
    animate();
  }

  /** Current camera direction in the engine's convention. */
  currentDirection(): Vec3 {
    const p = this.camera.position;
    const t = this.controls.target;
    return viewDirection([p.x, p.y, p.z], [t.x, t.y, t.z]);
  }

  loadObj(text: string): number {
    this.modelGroup.clear();
    const groups = parseObj(text);
    for (const [i, g] of groups.entries()) {
      const geometry = new THREE.BufferGeometry();
      geometry.setAttribute("position", new THREE.BufferAttribute(g.positions, 3));
      geometry.computeVertexNormals();
      const material = new THREE.MeshStandardMaterial({
        color: new THREE.Color().setHSL((i * 0.17) % 1.0, 0.45, 0.6),
        side: THREE.DoubleSide,
        flatShading: true,
      });
      this.modelGroup.add(new THREE.Mesh(geometry, material));
    }
    const r = boundingRadius(groups);
    this.controls.target.set(0, 0, r * 0.5);
    return groups.length;
  }
}
