#!/usr/bin/env python3
"""
eplidar setup script
Writes a local .env with artifact paths and reports which pipeline artifacts exist
"""

import sys
from pathlib import Path

PROJECT_ROOT = Path(__file__).parent

# artifact -> subcommand that produces it
ARTIFACTS = [
    ("data/manifest.ini", "simulate"),
    ("checkpoints/detector.epnn", "train-detector"),
    ("data/detections", "detect"),
    ("data/instances/train/instances.tsv", "extract"),
    ("checkpoints/pointnet.epnn", "train-classifier"),
    ("checkpoints/voxel_mlp.epnn", "train-classifier"),
    ("reports/metrics.json", "evaluate"),
]


def create_env():
    """Create .env with the default dataset, checkpoint and report locations"""
    env_file = PROJECT_ROOT / ".env"
    env_content = f"""# Local pipeline paths (read by eplidar.config via python-dotenv)
EPLIDAR_DATA_ROOT={PROJECT_ROOT / "data"}
EPLIDAR_CHECKPOINTS={PROJECT_ROOT / "checkpoints"}
EPLIDAR_REPORTS={PROJECT_ROOT / "reports"}
"""
    if env_file.exists():
        print(f"[WARNING] {env_file} already exists. Skipping creation.")
        return False
    try:
        env_file.write_text(env_content, encoding="utf-8")
        print(f"[INFO] Created {env_file}")
        return True
    except OSError as e:
        print(f"[ERROR] Failed to create {env_file}: {e}")
        return False


def verify_artifacts():
    """Report pipeline artifacts; returns the first missing stage or None"""
    print("\n[INFO] Checking pipeline artifacts...")
    first_missing = None
    for rel, producer in ARTIFACTS:
        if (PROJECT_ROOT / rel).exists():
            print(f"   found    {rel}")
        else:
            print(f"   missing  {rel}  (eplidar {producer})")
            first_missing = first_missing or producer
    return first_missing


def main():
    print("eplidar setup")
    print("=" * 50)
    env_ok = create_env()
    next_stage = verify_artifacts()

    print("\n" + "=" * 50)
    print(f"   .env:      {'created' if env_ok else 'kept'}")
    print(f"   pipeline:  {'complete' if next_stage is None else 'next stage: ' + next_stage}")
    print("\nNext steps:")
    print("   1. pip install -r requirements.txt")
    print("   2. python -m eplidar --preset smoke simulate")
    print("   3. train-detector, detect, extract, train-classifier, evaluate, report")


def _read_requirements():
    lines = (PROJECT_ROOT / "requirements.txt").read_text(encoding="utf-8").splitlines()
    return [ln.strip() for ln in lines if ln.strip() and not ln.startswith("#") and not ln.startswith("pytest")]


if __name__ == "__main__":
    if len(sys.argv) > 1:
        # invoked by pip / setuptools as a build backend
        from setuptools import find_packages, setup

        setup(
            name="eplidar",
            version="0.1.0",
            packages=find_packages(include=["eplidar", "eplidar.*"]),
            install_requires=_read_requirements(),
            python_requires=">=3.9",
        )
    else:
        main()
