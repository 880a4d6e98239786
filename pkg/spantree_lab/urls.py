"""
URL configuration for spantree_lab project.
"""
from django.contrib import admin
from django.urls import path, include

urlpatterns = [
    path('admin/', admin.site.urls),
    path('', include('experiments.urls')),
]
