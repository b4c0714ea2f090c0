import json

import numpy as np
import pytest

from blurlab.imageio import save_image


@pytest.fixture(scope="session")
def detection_fixture(tmp_path_factory):
    """10-image detection set: seeded PNGs plus COCO-subset ground truth."""
    root = tmp_path_factory.mktemp("fixture")
    img_dir = root / "images"
    img_dir.mkdir()
    rng = np.random.default_rng(1234)
    images = []
    annotations = []
    for i in range(10):
        w, h = 64, 48
        arr = rng.random((h, w, 3)).astype(np.float32)
        name = f"img_{i:03d}.png"
        save_image(img_dir / name, arr)
        images.append({"id": i, "file_name": name, "width": w, "height": h})
        for _ in range(2):
            bw = int(rng.integers(8, 20))
            bh = int(rng.integers(8, 16))
            x = int(rng.integers(0, w - bw))
            y = int(rng.integers(0, h - bh))
            annotations.append(
                {
                    "image_id": i,
                    "category_id": int(rng.integers(1, 3)),
                    "bbox": [float(x), float(y), float(bw), float(bh)],
                }
            )
    gt = {
        "images": images,
        "annotations": annotations,
        "categories": [{"id": 1, "name": "widget"}, {"id": 2, "name": "gadget"}],
    }
    gt_path = root / "gt.json"
    gt_path.write_text(json.dumps(gt))
    return {"root": root, "images": img_dir, "gt": gt_path}
