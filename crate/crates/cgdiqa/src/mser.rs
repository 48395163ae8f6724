//! Character candidate detection with maximally stable extremal regions.
//!
//! The gray-level component tree is built in one pass with union-find:
//! pixels are processed in increasing gray order and a node is emitted
//! whenever a component's pixel set changes at a level, so the node set
//! is exactly the distinct threshold-set components with their minimal
//! appearance level. Stability (variation), area and aspect filters then
//! reduce the tree to character patch bounding boxes.

use crate::imgio::GrayImage;
use crate::{Error, Result};

/// Which extremal regions to look for.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Polarity {
    /// Components of {p : img(p) <= t} — dark text on light paper.
    DarkOnLight,
    /// Same on the inverted image.
    LightOnDark,
    Both,
}

impl Polarity {
    /// Invert flags for the trees this polarity requires.
    fn passes(self) -> &'static [bool] {
        match self {
            Polarity::DarkOnLight => &[false],
            Polarity::LightOnDark => &[true],
            Polarity::Both => &[false, true],
        }
    }
}

#[derive(Debug, Clone)]
pub struct MserParams {
    /// Gray-level offset used by the stability measure.
    pub delta: u8,
    /// Maximal variation v_max a region may have and still be selected.
    pub max_variation: f64,
    /// Minimal region area in pixels.
    pub min_area: usize,
    /// Maximal region area as a fraction of total image pixels.
    pub max_area_fraction: f64,
    /// Width/height ratio bounds for surviving bounding boxes.
    pub min_aspect: f64,
    pub max_aspect: f64,
    pub polarity: Polarity,
}

impl Default for MserParams {
    fn default() -> Self {
        MserParams {
            delta: 5,
            max_variation: 0.2,
            min_area: 13,
            max_area_fraction: 0.001,
            min_aspect: 0.25,
            max_aspect: 4.0,
            polarity: Polarity::DarkOnLight,
        }
    }
}

impl MserParams {
    pub fn validate(&self) -> Result<()> {
        if self.delta < 1 {
            return Err(Error::Contract("delta must be >= 1".into()));
        }
        if self.max_variation <= 0.0 || self.max_variation.is_nan() {
            return Err(Error::Contract("max_variation must be > 0".into()));
        }
        if self.min_area == 0 {
            return Err(Error::Contract("min_area must be > 0".into()));
        }
        if !(self.max_area_fraction > 0.0 && self.max_area_fraction <= 1.0) {
            return Err(Error::Contract(
                "max_area_fraction must be in (0, 1]".into(),
            ));
        }
        if !(self.min_aspect > 0.0 && self.min_aspect < self.max_aspect) {
            return Err(Error::Contract("need 0 < min_aspect < max_aspect".into()));
        }
        Ok(())
    }
}

/// Inclusive pixel-coordinate bounding box.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct BBox {
    pub x_min: u32,
    pub y_min: u32,
    pub x_max: u32,
    pub y_max: u32,
}

impl BBox {
    pub fn width(&self) -> u32 {
        self.x_max - self.x_min + 1
    }

    pub fn height(&self) -> u32 {
        self.y_max - self.y_min + 1
    }

    pub fn pixel_count(&self) -> usize {
        self.width() as usize * self.height() as usize
    }

    pub fn aspect(&self) -> f64 {
        self.width() as f64 / self.height() as f64
    }

    pub fn contains(&self, other: &BBox) -> bool {
        self.x_min <= other.x_min
            && self.y_min <= other.y_min
            && self.x_max >= other.x_max
            && self.y_max >= other.y_max
    }

    fn merge(&mut self, other: &BBox) {
        self.x_min = self.x_min.min(other.x_min);
        self.y_min = self.y_min.min(other.y_min);
        self.x_max = self.x_max.max(other.x_max);
        self.y_max = self.y_max.max(other.y_max);
    }
}

/// One node of the component tree: a distinct threshold-set component,
/// recorded at the lowest level at which its pixel set appears.
#[derive(Debug, Clone)]
pub struct ExtremalRegion {
    pub level: u8,
    pub area: u32,
    pub bbox: BBox,
    pub parent: Option<u32>,
}

/// Nesting tree of extremal regions; the last node is the whole-image root.
#[derive(Debug)]
pub struct ComponentTree {
    pub nodes: Vec<ExtremalRegion>,
}

impl ComponentTree {
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Child lists, index-aligned with `nodes`.
    pub fn children(&self) -> Vec<Vec<u32>> {
        let mut children = vec![Vec::new(); self.nodes.len()];
        for (i, n) in self.nodes.iter().enumerate() {
            if let Some(p) = n.parent {
                children[p as usize].push(i as u32);
            }
        }
        children
    }
}

/// Character patch bounding box in preprocessed-image coordinates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub struct CharacterPatch {
    pub bbox: BBox,
}

struct UnionFind {
    parent: Vec<u32>,
}

impl UnionFind {
    fn new(n: usize) -> Self {
        UnionFind {
            parent: (0..n as u32).collect(),
        }
    }

    fn find(&mut self, mut x: u32) -> u32 {
        // path halving
        while self.parent[x as usize] != x {
            let gp = self.parent[self.parent[x as usize] as usize];
            self.parent[x as usize] = gp;
            x = gp;
        }
        x
    }
}

/// Build the nesting forest of threshold-set components with 4-connectivity.
/// `light_on_dark` inverts the image first.
pub fn build_component_tree(img: &GrayImage, light_on_dark: bool) -> ComponentTree {
    let w = img.width();
    let h = img.height();
    let n = w * h;
    let values: Vec<u8> = if light_on_dark {
        img.data().iter().map(|&v| 255 - v).collect()
    } else {
        img.data().to_vec()
    };

    // counting sort of pixel indices by gray level
    let mut counts = [0usize; 257];
    for &v in &values {
        counts[v as usize + 1] += 1;
    }
    for i in 1..257 {
        counts[i] += counts[i - 1];
    }
    let starts = counts;
    let mut cursor = starts;
    let mut order = vec![0u32; n];
    for (idx, &v) in values.iter().enumerate() {
        order[cursor[v as usize]] = idx as u32;
        cursor[v as usize] += 1;
    }

    let mut uf = UnionFind::new(n);
    let mut added = vec![false; n];
    let mut area = vec![0u32; n];
    let mut bbox = vec![
        BBox {
            x_min: 0,
            y_min: 0,
            x_max: 0,
            y_max: 0
        };
        n
    ];
    // emitted nodes of merged sub-components awaiting a parent
    let mut pending: Vec<Vec<u32>> = vec![Vec::new(); n];
    let mut dirty = vec![false; n];
    let mut nodes: Vec<ExtremalRegion> = Vec::new();
    let mut touched: Vec<u32> = Vec::new();

    let union = |uf: &mut UnionFind,
                 area: &mut [u32],
                 bbox: &mut [BBox],
                 pending: &mut [Vec<u32>],
                 dirty: &mut [bool],
                 a: u32,
                 b: u32| {
        let ra = uf.find(a);
        let rb = uf.find(b);
        if ra == rb {
            return;
        }
        let (keep, gone) = if area[ra as usize] >= area[rb as usize] {
            (ra, rb)
        } else {
            (rb, ra)
        };
        uf.parent[gone as usize] = keep;
        area[keep as usize] += area[gone as usize];
        let gb = bbox[gone as usize];
        bbox[keep as usize].merge(&gb);
        let mut moved = std::mem::take(&mut pending[gone as usize]);
        pending[keep as usize].append(&mut moved);
        dirty[keep as usize] = true;
    };

    for level in 0u16..256 {
        let bucket = &order[starts[level as usize]..starts[level as usize + 1]];
        // add all pixels of this level before any union so same-level
        // neighbors are visible
        for &p in bucket {
            let pi = p as usize;
            added[pi] = true;
            area[pi] = 1;
            let (x, y) = ((pi % w) as u32, (pi / w) as u32);
            bbox[pi] = BBox {
                x_min: x,
                y_min: y,
                x_max: x,
                y_max: y,
            };
            dirty[pi] = true;
            touched.push(p);
        }
        for &p in bucket {
            let pi = p as usize;
            let (x, y) = (pi % w, pi / w);
            if x > 0 && added[pi - 1] {
                union(
                    &mut uf,
                    &mut area,
                    &mut bbox,
                    &mut pending,
                    &mut dirty,
                    p,
                    p - 1,
                );
            }
            if x + 1 < w && added[pi + 1] {
                union(
                    &mut uf,
                    &mut area,
                    &mut bbox,
                    &mut pending,
                    &mut dirty,
                    p,
                    p + 1,
                );
            }
            if y > 0 && added[pi - w] {
                union(
                    &mut uf,
                    &mut area,
                    &mut bbox,
                    &mut pending,
                    &mut dirty,
                    p,
                    p - w as u32,
                );
            }
            if y + 1 < h && added[pi + w] {
                union(
                    &mut uf,
                    &mut area,
                    &mut bbox,
                    &mut pending,
                    &mut dirty,
                    p,
                    p + w as u32,
                );
            }
        }
        // emit one node per component whose pixel set changed at this level
        for &p in &touched {
            let r = uf.find(p);
            let ri = r as usize;
            if !dirty[ri] {
                continue;
            }
            dirty[ri] = false;
            let id = nodes.len() as u32;
            nodes.push(ExtremalRegion {
                level: level as u8,
                area: area[ri],
                bbox: bbox[ri],
                parent: None,
            });
            for &c in &pending[ri] {
                nodes[c as usize].parent = Some(id);
            }
            pending[ri].clear();
            pending[ri].push(id);
        }
        touched.clear();
    }
    ComponentTree { nodes }
}

/// Relative area growth of the component containing `node` when the
/// threshold is raised by `delta` gray levels.
pub fn compute_variation(tree: &ComponentTree, node: u32, delta: u8) -> f64 {
    let base = &tree.nodes[node as usize];
    let target = base.level as u16 + delta as u16;
    let mut cur = node as usize;
    while let Some(p) = tree.nodes[cur].parent {
        if tree.nodes[p as usize].level as u16 <= target {
            cur = p as usize;
        } else {
            break;
        }
    }
    (tree.nodes[cur].area as f64 - base.area as f64) / base.area as f64
}

/// Indices of selected (maximally stable) regions.
pub fn select_mser(tree: &ComponentTree, params: &MserParams, total_pixels: usize) -> Vec<u32> {
    let n = tree.nodes.len();
    let variation: Vec<f64> = (0..n as u32)
        .map(|i| compute_variation(tree, i, params.delta))
        .collect();
    let children = tree.children();
    let max_area = params.max_area_fraction * total_pixels as f64;

    let mut survives = vec![false; n];
    for i in 0..n {
        let node = &tree.nodes[i];
        let v = variation[i];
        if v > params.max_variation {
            continue;
        }
        if (node.area as usize) < params.min_area || node.area as f64 > max_area {
            continue;
        }
        // local minimum of variation along the root-to-leaf path
        if let Some(p) = node.parent {
            if v > variation[p as usize] {
                continue;
            }
        }
        if children[i].iter().any(|&c| variation[c as usize] < v) {
            continue;
        }
        survives[i] = true;
    }

    // duplicate suppression: nested survivors closer than 10% in area
    // form a chain; keep the minimal-variation node (ties -> child)
    let mut nearest_surviving_ancestor = vec![None; n];
    for i in 0..n {
        if !survives[i] {
            continue;
        }
        let mut cur = tree.nodes[i].parent;
        while let Some(p) = cur {
            if survives[p as usize] {
                nearest_surviving_ancestor[i] = Some(p as usize);
                break;
            }
            cur = tree.nodes[p as usize].parent;
        }
    }
    let mut removed = vec![false; n];
    // chains are walked leaf-to-root; comparing each survivor with its
    // current surviving ancestor is enough because duplicate clusters
    // cannot branch (two disjoint children cannot both hold >90% of the
    // parent's area)
    let mut order: Vec<usize> = (0..n).filter(|&i| survives[i]).collect();
    order.sort_by_key(|&i| tree.nodes[i].area);
    for &i in &order {
        if removed[i] {
            continue;
        }
        let mut anc = nearest_surviving_ancestor[i];
        while let Some(a) = anc {
            if removed[a] {
                anc = nearest_surviving_ancestor[a];
                continue;
            }
            let (ai, aa) = (tree.nodes[i].area as f64, tree.nodes[a].area as f64);
            if (aa - ai) / aa < 0.1 {
                if variation[i] <= variation[a] {
                    removed[a] = true;
                    anc = nearest_surviving_ancestor[a];
                } else {
                    removed[i] = true;
                    break;
                }
            } else {
                break;
            }
        }
    }
    (0..n as u32)
        .filter(|&i| survives[i as usize] && !removed[i as usize])
        .collect()
}

/// Full detection: component trees per polarity, MSER selection, aspect and
/// bbox-area filtering, cross-polarity deduplication.
pub fn extract_character_patches(
    img: &GrayImage,
    params: &MserParams,
) -> Result<Vec<CharacterPatch>> {
    params.validate()?;
    let total = img.width() * img.height();
    let max_area = params.max_area_fraction * total as f64;
    let mut boxes: Vec<BBox> = Vec::new();
    for &invert in params.polarity.passes() {
        let tree = build_component_tree(img, invert);
        for id in select_mser(&tree, params, total) {
            let bbox = tree.nodes[id as usize].bbox;
            let aspect = bbox.aspect();
            if aspect < params.min_aspect || aspect > params.max_aspect {
                continue;
            }
            if bbox.pixel_count() as f64 > max_area {
                continue;
            }
            boxes.push(bbox);
        }
    }
    boxes.sort();
    boxes.dedup();
    Ok(boxes
        .into_iter()
        .map(|bbox| CharacterPatch { bbox })
        .collect())
}
