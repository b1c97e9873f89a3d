from dataset.netpbm import (ImageFile, channel_planes, convert_image, decode_netpbm, encode_netpbm, load_image,
                            luminance, save_image, to_image_file)
from dataset.patches import (PatchDataset, build_dataset, extract_patches, load_dataset, load_planes,
                             read_manifest, save_dataset)
