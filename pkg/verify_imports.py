import sys
import os

# Add the project root to sys.path
sys.path.append(os.getcwd())

MODULES = [
    "app.services.spectrum",
    "app.services.cavity",
    "app.services.transmission",
    "app.services.rng",
    "app.services.trajectory",
    "app.services.readout",
    "app.services.ramsey",
    "app.harness.settings",
    "app.harness.io",
    "app.harness.runner",
    "app.routes.experiments",
    "app.main",
    "app.cli",
]

try:
    for name in MODULES:
        print(f"Checking {name}...")
        __import__(name)
        print(f"✅ {name} imported")

    print("ALL IMPORTS SUCCESSFUL")

except ImportError as e:
    print(f"❌ ImportError: {e}")
    sys.exit(1)
except Exception as e:
    print(f"❌ Error: {e}")
    sys.exit(1)
